//! Shared helpers for the line-oriented artifact formats.
//!
//! Every artifact starts with a `NAME vN` header line, optionally followed
//! by `#`-prefixed provenance comments. All text is UTF-8 with `\n` endings.

use crate::error::{Error, Result};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::Path;

/// Prints a float with 9 significant digits, the precision used by the
/// embedding, graph and model dumps.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let s = format!("{x:.8e}");
    // trim a zero-padded mantissa so dumps stay compact
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
            format!("{mantissa}e{exp}")
        }
        None => s,
    }
}

/// Hex sha256 of a byte buffer.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Hex sha256 of a file's contents.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(sha256_hex(&bytes))
}

/// Writes `content` to `path`, mapping io failures to a path-carrying error.
pub fn write_file(path: &Path, content: &str) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    file.write_all(content.as_bytes()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a file to a string, mapping io failures to a path-carrying error.
pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Splits artifact text into (header-checked) body lines, verifying the
/// version header and skipping plain `#` comments. Lines are returned with
/// their original 1-based numbers so parse errors stay addressable.
/// Comment lines matching `keep_comment` are kept (graph dumps carry an
/// `# isolated:` trailer that is data, not commentary).
pub fn body_lines<'a>(
    text: &'a str,
    header: &'static str,
    keep_comment: Option<&str>,
) -> Result<Vec<(usize, &'a str)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first == header => {}
        Some((_, first)) => {
            return Err(Error::Format {
                format: header,
                line: 1,
                reason: format!("expected header {header:?}, found {first:?}"),
            })
        }
        None => {
            return Err(Error::Format {
                format: header,
                line: 1,
                reason: "empty file".to_string(),
            })
        }
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        if line.starts_with('#') {
            if let Some(prefix) = keep_comment {
                if line.starts_with(prefix) {
                    out.push((idx + 1, line));
                }
            }
            continue;
        }
        out.push((idx + 1, line));
    }
    Ok(out)
}

/// Extracts the value of a `# key: value` provenance comment, if present.
pub fn comment_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    let prefix = format!("# {key}:");
    text.lines()
        .take_while(|l| l.starts_with('#') || l.ends_with("v1"))
        .find_map(|l| l.strip_prefix(prefix.as_str()))
        .map(str::trim)
}

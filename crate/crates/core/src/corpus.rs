//! Corpus ingestion: tokenization, preprocessing filters, vocabulary
//! construction, train/test splitting and the `HLSM-CORPUS v1` format.

use crate::error::{Error, Result};
use crate::format;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rust_stemmers::{Algorithm, Stemmer};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const CORPUS_HEADER: &str = "HLSM-CORPUS v1";

/// The 163-entry stopword list shipped with the crate.
const STOPWORDS_EN: &str = include_str!("../data/stopwords_en_163.txt");

/// A document that has not been tokenized yet.
#[derive(Debug, Clone)]
pub struct RawDocument {
    pub label: Option<String>,
    pub text: String,
}

/// A tokenized document with per-word counts against a [`Vocabulary`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: u32,
    pub label: Option<String>,
    /// word_id -> occurrence count; keys are vocabulary ids.
    pub token_counts: BTreeMap<u32, u32>,
    /// Total token count; always the sum of `token_counts` values.
    pub length: u32,
}

impl Document {
    fn from_counts(doc_id: u32, label: Option<String>, token_counts: BTreeMap<u32, u32>) -> Self {
        let length = token_counts.values().sum();
        Document {
            doc_id,
            label,
            token_counts,
            length,
        }
    }

    pub fn count(&self, word_id: u32) -> u32 {
        self.token_counts.get(&word_id).copied().unwrap_or(0)
    }
}

/// Ordered word list with inverse lookup and per-word frequency statistics.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    word_to_id: HashMap<String, u32>,
    pub doc_freq: Vec<u32>,
    pub corpus_freq: Vec<u64>,
}

impl Vocabulary {
    fn new(words: Vec<String>, doc_freq: Vec<u32>, corpus_freq: Vec<u64>) -> Self {
        let word_to_id = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Vocabulary {
            words,
            word_to_id,
            doc_freq,
            corpus_freq,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.word_to_id.get(word).copied()
    }

    /// Total token count over the corpus the statistics were built from.
    pub fn total_tokens(&self) -> u64 {
        self.corpus_freq.iter().sum()
    }

    /// Content hash over the ordered word list; used to detect mismatched
    /// model/corpus pairs.
    pub fn content_hash(&self) -> String {
        format::sha256_hex(self.words.join("\n").as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitTag {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub vocabulary: Vocabulary,
    pub split_tag: SplitTag,
}

impl Corpus {
    /// Sum of document lengths; the token total of the documents actually
    /// present (differs from vocabulary statistics for split corpora, which
    /// inherit the unsplit corpus's counts).
    pub fn total_tokens(&self) -> u64 {
        self.documents.iter().map(|d| d.length as u64).sum()
    }
}

/// Filter settings for [`preprocess`].
#[derive(Debug, Clone)]
pub struct PreprocessOptions {
    pub stopwords: HashSet<String>,
    /// Words with total corpus occurrences below this are dropped.
    pub min_count: u64,
    /// Porter-style stemming, applied after stopword removal. Off by default.
    pub stemming: bool,
    /// Documents with fewer remaining tokens than this are dropped.
    pub min_doc_tokens: u32,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            stopwords: default_stopwords(),
            min_count: 3,
            stemming: false,
            min_doc_tokens: 1,
        }
    }
}

impl PreprocessOptions {
    /// No stopwords, no count filter, no stemming; keeps every token.
    pub fn none() -> Self {
        PreprocessOptions {
            stopwords: HashSet::new(),
            min_count: 1,
            stemming: false,
            min_doc_tokens: 1,
        }
    }
}

/// The stopword list shipped in `data/stopwords_en_163.txt`.
pub fn default_stopwords() -> HashSet<String> {
    STOPWORDS_EN.split_whitespace().map(str::to_string).collect()
}

/// Reads a stopword list, one word per line.
pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let text = format::read_file(path)?;
    Ok(text.split_whitespace().map(str::to_string).collect())
}

/// Splits text into lowercased alphabetic tokens. Every non-alphabetic
/// character is a separator and tokens shorter than two characters are
/// dropped.
pub fn tokenize(raw_text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in raw_text.chars() {
        if ch.is_alphabetic() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            if current.chars().count() >= 2 {
                tokens.push(std::mem::take(&mut current));
            } else {
                current.clear();
            }
        }
    }
    if current.chars().count() >= 2 {
        tokens.push(current);
    }
    tokens
}

/// Tokenizes raw documents, applies the stopword / minimum-count filters,
/// drops documents left empty, and builds the vocabulary over the retained
/// words (alphabetically ordered, so ids are stable across runs).
pub fn preprocess(docs: &[RawDocument], options: &PreprocessOptions) -> Result<Corpus> {
    if options.min_count < 1 {
        return Err(Error::InvalidParameter {
            name: "min_count",
            reason: "must be at least 1".to_string(),
        });
    }
    let stemmer = options.stemming.then(|| Stemmer::create(Algorithm::English));

    let tokenized: Vec<(Option<String>, BTreeMap<String, u32>)> = docs
        .par_iter()
        .map(|doc| {
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for token in tokenize(&doc.text) {
                if options.stopwords.contains(&token) {
                    continue;
                }
                let token = match &stemmer {
                    Some(s) => s.stem(&token).into_owned(),
                    None => token,
                };
                *counts.entry(token).or_insert(0) += 1;
            }
            (doc.label.clone(), counts)
        })
        .collect();

    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    for (_, counts) in &tokenized {
        for (word, count) in counts {
            *totals.entry(word).or_insert(0) += *count as u64;
        }
    }
    let retained: Vec<String> = totals
        .iter()
        .filter(|(_, &total)| total >= options.min_count)
        .map(|(word, _)| word.to_string())
        .collect();
    let word_ids: HashMap<&str, u32> = retained
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i as u32))
        .collect();

    let min_doc_tokens = options.min_doc_tokens.max(1);
    let mut documents = Vec::new();
    let mut doc_freq = vec![0u32; retained.len()];
    let mut corpus_freq = vec![0u64; retained.len()];
    for (label, counts) in tokenized {
        let mut token_counts = BTreeMap::new();
        for (word, count) in counts {
            if let Some(&id) = word_ids.get(word.as_str()) {
                token_counts.insert(id, count);
            }
        }
        let doc = Document::from_counts(documents.len() as u32, label, token_counts);
        if doc.length < min_doc_tokens {
            continue;
        }
        for (&id, &count) in &doc.token_counts {
            doc_freq[id as usize] += 1;
            corpus_freq[id as usize] += count as u64;
        }
        documents.push(doc);
    }
    if documents.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    // Dropping short documents can zero out a retained word's counts;
    // compact those entries so corpus_freq >= doc_freq >= 1 always holds.
    let corpus = if corpus_freq.contains(&0) {
        compact_vocabulary(documents, retained, doc_freq, corpus_freq)
    } else {
        Corpus {
            documents,
            vocabulary: Vocabulary::new(retained, doc_freq, corpus_freq),
            split_tag: SplitTag::Train,
        }
    };
    Ok(corpus)
}

fn compact_vocabulary(
    documents: Vec<Document>,
    words: Vec<String>,
    doc_freq: Vec<u32>,
    corpus_freq: Vec<u64>,
) -> Corpus {
    let mut remap = vec![u32::MAX; words.len()];
    let mut kept_words = Vec::new();
    let mut kept_df = Vec::new();
    let mut kept_cf = Vec::new();
    for (old_id, word) in words.into_iter().enumerate() {
        if corpus_freq[old_id] > 0 {
            remap[old_id] = kept_words.len() as u32;
            kept_words.push(word);
            kept_df.push(doc_freq[old_id]);
            kept_cf.push(corpus_freq[old_id]);
        }
    }
    let documents = documents
        .into_iter()
        .map(|doc| {
            let token_counts = doc
                .token_counts
                .into_iter()
                .map(|(id, count)| (remap[id as usize], count))
                .collect();
            Document::from_counts(doc.doc_id, doc.label, token_counts)
        })
        .collect();
    Corpus {
        documents,
        vocabulary: Vocabulary::new(kept_words, kept_df, kept_cf),
        split_tag: SplitTag::Train,
    }
}

/// Reads a directory-per-class corpus: each subdirectory of `root` is a
/// class label and each plain file inside it is one document. Paths are
/// sorted so the result is deterministic.
pub fn load_directory_raw(root: &Path) -> Result<Vec<RawDocument>> {
    let io_err = |source| Error::Io {
        path: root.to_path_buf(),
        source,
    };
    let mut class_dirs: Vec<_> = fs::read_dir(root)
        .map_err(io_err)?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(io_err)?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();

    let mut docs = Vec::new();
    for dir in class_dirs {
        let label = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let dir_err = |source| Error::Io {
            path: dir.clone(),
            source,
        };
        let mut files: Vec<_> = fs::read_dir(&dir)
            .map_err(dir_err)?
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(dir_err)?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for file in files {
            let bytes = fs::read(&file).map_err(|source| Error::Io {
                path: file.clone(),
                source,
            })?;
            docs.push(RawDocument {
                label: Some(label.clone()),
                text: String::from_utf8_lossy(&bytes).into_owned(),
            });
        }
    }
    if docs.is_empty() {
        return Err(Error::EmptyInput {
            path: root.to_path_buf(),
        });
    }
    Ok(docs)
}

/// [`load_directory_raw`] followed by filter-free preprocessing; one labeled
/// document per file.
pub fn load_directory_corpus(root: &Path) -> Result<Corpus> {
    preprocess(&load_directory_raw(root)?, &PreprocessOptions::none())
}

/// Reads a one-document-per-line file. A line containing a tab is split
/// into `label<TAB>text`; otherwise the whole line is unlabeled text.
pub fn load_line_raw(path: &Path) -> Result<Vec<RawDocument>> {
    let text = format::read_file(path)?;
    let docs: Vec<RawDocument> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| match line.split_once('\t') {
            Some((label, body)) => RawDocument {
                label: Some(label.to_string()),
                text: body.to_string(),
            },
            None => RawDocument {
                label: None,
                text: line.to_string(),
            },
        })
        .collect();
    if docs.is_empty() {
        return Err(Error::EmptyInput {
            path: path.to_path_buf(),
        });
    }
    Ok(docs)
}

/// Deterministic stratified split into train and test corpora. Both halves
/// keep the input corpus's vocabulary verbatim; words that end up unseen in
/// the train documents surface later as out-of-vocabulary during evaluation.
pub fn split_corpus(corpus: &Corpus, held_out_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(held_out_fraction > 0.0 && held_out_fraction < 1.0) {
        return Err(Error::InvalidParameter {
            name: "held_out_fraction",
            reason: format!("{held_out_fraction} is not in (0, 1)"),
        });
    }
    let mut by_label: BTreeMap<Option<&str>, Vec<usize>> = BTreeMap::new();
    for (idx, doc) in corpus.documents.iter().enumerate() {
        by_label.entry(doc.label.as_deref()).or_default().push(idx);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_flags = vec![false; corpus.documents.len()];
    for indices in by_label.values() {
        let mut shuffled = indices.clone();
        shuffled.shuffle(&mut rng);
        let test_count = (indices.len() as f64 * held_out_fraction).round() as usize;
        for &idx in shuffled.iter().take(test_count.min(indices.len())) {
            test_flags[idx] = true;
        }
    }

    let take = |want_test: bool, tag: SplitTag| -> Corpus {
        let documents = corpus
            .documents
            .iter()
            .filter(|d| test_flags[d.doc_id as usize] == want_test)
            .enumerate()
            .map(|(new_id, d)| Document {
                doc_id: new_id as u32,
                label: d.label.clone(),
                token_counts: d.token_counts.clone(),
                length: d.length,
            })
            .collect();
        Corpus {
            documents,
            vocabulary: corpus.vocabulary.clone(),
            split_tag: tag,
        }
    };
    Ok((take(false, SplitTag::Train), take(true, SplitTag::Test)))
}

/// Serializes a corpus in the `HLSM-CORPUS v1` format. `comments` are
/// emitted as `#`-prefixed provenance lines right after the header.
pub fn write_corpus(corpus: &Corpus, comments: &[String]) -> String {
    let mut out = String::new();
    out.push_str(CORPUS_HEADER);
    out.push('\n');
    for comment in comments {
        let _ = writeln!(out, "# {comment}");
    }
    if corpus.split_tag == SplitTag::Test {
        out.push_str("# split: test\n");
    }
    let vocab = &corpus.vocabulary;
    for (id, word) in vocab.words.iter().enumerate() {
        let _ = writeln!(
            out,
            "{word}\t{}\t{}",
            vocab.corpus_freq[id], vocab.doc_freq[id]
        );
    }
    out.push('\n');
    for doc in &corpus.documents {
        let label = doc.label.as_deref().unwrap_or("");
        let pairs: Vec<String> = doc
            .token_counts
            .iter()
            .map(|(id, count)| format!("{id}:{count}"))
            .collect();
        let _ = writeln!(out, "{}\t{label}\t{}", doc.doc_id, pairs.join(","));
    }
    out
}

pub fn write_corpus_file(corpus: &Corpus, path: &Path, comments: &[String]) -> Result<()> {
    format::write_file(path, &write_corpus(corpus, comments))
}

/// Parses the `HLSM-CORPUS v1` format.
pub fn read_corpus(text: &str) -> Result<Corpus> {
    let fmt_err = |line: usize, reason: String| Error::Format {
        format: CORPUS_HEADER,
        line,
        reason,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first == CORPUS_HEADER => {}
        other => {
            return Err(fmt_err(
                1,
                format!(
                    "expected header {CORPUS_HEADER:?}, found {:?}",
                    other.map(|(_, l)| l)
                ),
            ))
        }
    }

    let mut words = Vec::new();
    let mut corpus_freq = Vec::new();
    let mut doc_freq = Vec::new();
    let mut in_vocab = true;
    let mut documents = Vec::new();
    let mut split_tag = SplitTag::Train;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.starts_with('#') {
            if let Some(tag) = line.strip_prefix("# split:") {
                if tag.trim() == "test" {
                    split_tag = SplitTag::Test;
                }
            }
            continue;
        }
        if in_vocab {
            if line.is_empty() {
                in_vocab = false;
                continue;
            }
            let mut parts = line.split('\t');
            let word = parts
                .next()
                .ok_or_else(|| fmt_err(line_no, "missing word".to_string()))?;
            let cf: u64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| fmt_err(line_no, "bad corpus_freq".to_string()))?;
            let df: u32 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| fmt_err(line_no, "bad doc_freq".to_string()))?;
            words.push(word.to_string());
            corpus_freq.push(cf);
            doc_freq.push(df);
        } else {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let doc_id: u32 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| fmt_err(line_no, "bad doc_id".to_string()))?;
            let label = match parts.next() {
                Some("") => None,
                Some(l) => Some(l.to_string()),
                None => return Err(fmt_err(line_no, "missing label field".to_string())),
            };
            let mut token_counts = BTreeMap::new();
            let body = parts.next().unwrap_or("");
            for pair in body.split(',').filter(|p| !p.is_empty()) {
                let (id, count) = pair
                    .split_once(':')
                    .ok_or_else(|| fmt_err(line_no, format!("bad pair {pair:?}")))?;
                let id: u32 = id
                    .parse()
                    .map_err(|_| fmt_err(line_no, format!("bad word id {id:?}")))?;
                let count: u32 = count
                    .parse()
                    .map_err(|_| fmt_err(line_no, format!("bad count {count:?}")))?;
                if id as usize >= words.len() {
                    return Err(fmt_err(line_no, format!("word id {id} out of range")));
                }
                token_counts.insert(id, count);
            }
            if documents.len() as u32 != doc_id {
                return Err(fmt_err(line_no, format!("doc ids not contiguous at {doc_id}")));
            }
            documents.push(Document::from_counts(doc_id, label, token_counts));
        }
    }
    if documents.is_empty() {
        return Err(fmt_err(0, "no documents".to_string()));
    }
    Ok(Corpus {
        documents,
        vocabulary: Vocabulary::new(words, doc_freq, corpus_freq),
        split_tag,
    })
}

pub fn read_corpus_file(path: &Path) -> Result<Corpus> {
    read_corpus(&format::read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(texts: &[&str]) -> Vec<RawDocument> {
        texts
            .iter()
            .map(|t| RawDocument {
                label: None,
                text: t.to_string(),
            })
            .collect()
    }

    #[test]
    fn tokenize_lowercases_and_splits_on_non_alphabetic() {
        assert_eq!(tokenize("The JPEG image"), vec!["the", "jpeg", "image"]);
    }

    #[test]
    fn tokenize_empty_input() {
        assert_eq!(tokenize(""), Vec::<String>::new());
    }

    #[test]
    fn tokenize_drops_short_fragments() {
        // "3d" splits into a one-letter fragment that gets dropped
        assert_eq!(tokenize("3D-ray ray"), vec!["ray", "ray"]);
    }

    #[test]
    fn preprocess_applies_min_count() {
        let docs = raw(&["dog dog cat", "dog fish fish fish"]);
        let mut opts = PreprocessOptions::none();
        opts.min_count = 3;
        let corpus = preprocess(&docs, &opts).unwrap();
        // "dog" occurs 3 times, "fish" 3 times, "cat" twice
        assert_eq!(corpus.vocabulary.words(), ["dog", "fish"]);
    }

    #[test]
    fn preprocess_keeps_everything_when_disabled() {
        let docs = raw(&["dog cat", "fish"]);
        let corpus = preprocess(&docs, &PreprocessOptions::none()).unwrap();
        assert_eq!(corpus.vocabulary.len(), 3);
    }

    #[test]
    fn preprocess_hand_worked_example() {
        // {"aa bb bb", "bb cc"} with stopwords {aa}, min_count 2 -> vocab {bb}
        let docs = raw(&["aa bb bb", "bb cc"]);
        let opts = PreprocessOptions {
            stopwords: ["aa".to_string()].into_iter().collect(),
            min_count: 2,
            stemming: false,
            min_doc_tokens: 1,
        };
        let corpus = preprocess(&docs, &opts).unwrap();
        assert_eq!(corpus.vocabulary.words(), ["bb"]);
        assert_eq!(corpus.documents.len(), 2);
        assert_eq!(
            corpus.documents[1].token_counts,
            [(0, 1)].into_iter().collect()
        );
    }

    #[test]
    fn preprocess_errors_when_everything_filtered() {
        let docs = raw(&["the and", "of the"]);
        let opts = PreprocessOptions {
            stopwords: default_stopwords(),
            min_count: 1,
            stemming: false,
            min_doc_tokens: 1,
        };
        assert!(matches!(preprocess(&docs, &opts), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn token_conservation() {
        let docs = raw(&["alpha beta beta", "beta gamma alpha", "gamma gamma"]);
        let corpus = preprocess(&docs, &PreprocessOptions::none()).unwrap();
        for (id, _) in corpus.vocabulary.words().iter().enumerate() {
            let summed: u64 = corpus
                .documents
                .iter()
                .map(|d| d.count(id as u32) as u64)
                .sum();
            assert_eq!(summed, corpus.vocabulary.corpus_freq[id]);
        }
        for doc in &corpus.documents {
            assert_eq!(doc.length, doc.token_counts.values().sum::<u32>());
        }
    }

    #[test]
    fn filter_idempotence() {
        let docs = raw(&["dog dog cat bird", "cat cat dog", "bird fish"]);
        let opts = PreprocessOptions {
            stopwords: ["fish".to_string()].into_iter().collect(),
            min_count: 2,
            stemming: false,
            min_doc_tokens: 1,
        };
        let once = preprocess(&docs, &opts).unwrap();
        let as_raw: Vec<RawDocument> = once
            .documents
            .iter()
            .map(|d| {
                let mut words = Vec::new();
                for (&id, &count) in &d.token_counts {
                    for _ in 0..count {
                        words.push(once.vocabulary.word(id).to_string());
                    }
                }
                RawDocument {
                    label: d.label.clone(),
                    text: words.join(" "),
                }
            })
            .collect();
        let twice = preprocess(&as_raw, &opts).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn stemming_flag_collapses_inflections() {
        let docs = raw(&["images imaging imaged", "image"]);
        let mut opts = PreprocessOptions::none();
        opts.stemming = true;
        let corpus = preprocess(&docs, &opts).unwrap();
        assert_eq!(corpus.vocabulary.len(), 1);
        assert_eq!(corpus.vocabulary.corpus_freq[0], 4);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let docs: Vec<RawDocument> = (0..100)
            .map(|i| RawDocument {
                label: Some(format!("class{}", i % 4)),
                text: format!("word{} filler common", (b'a' + (i % 26) as u8) as char),
            })
            .collect();
        let corpus = preprocess(&docs, &PreprocessOptions::none()).unwrap();
        let (train, test) = split_corpus(&corpus, 0.2, 7).unwrap();
        assert_eq!(train.documents.len(), 80);
        assert_eq!(test.documents.len(), 20);
        assert_eq!(train.split_tag, SplitTag::Train);
        assert_eq!(test.split_tag, SplitTag::Test);
        // stratified: five test docs per class
        for c in 0..4 {
            let label = format!("class{c}");
            let n = test
                .documents
                .iter()
                .filter(|d| d.label.as_deref() == Some(label.as_str()))
                .count();
            assert_eq!(n, 5);
        }
        let (train2, test2) = split_corpus(&corpus, 0.2, 7).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
    }

    #[test]
    fn split_two_docs_in_half() {
        let corpus = preprocess(&raw(&["aa bb", "bb cc"]), &PreprocessOptions::none()).unwrap();
        let (train, test) = split_corpus(&corpus, 0.5, 1).unwrap();
        assert_eq!(train.documents.len(), 1);
        assert_eq!(test.documents.len(), 1);
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let corpus = preprocess(&raw(&["aa bb"]), &PreprocessOptions::none()).unwrap();
        assert!(split_corpus(&corpus, 0.0, 1).is_err());
        assert!(split_corpus(&corpus, 1.0, 1).is_err());
    }

    #[test]
    fn split_partitions_documents() {
        let docs = raw(&["aa bb", "bb cc", "cc dd", "dd ee", "ee aa"]);
        let corpus = preprocess(&docs, &PreprocessOptions::none()).unwrap();
        let (train, test) = split_corpus(&corpus, 0.4, 3).unwrap();
        let mut all: Vec<_> = train
            .documents
            .iter()
            .chain(test.documents.iter())
            .map(|d| d.token_counts.clone())
            .collect();
        all.sort();
        let mut orig: Vec<_> = corpus
            .documents
            .iter()
            .map(|d| d.token_counts.clone())
            .collect();
        orig.sort();
        assert_eq!(all, orig);
    }

    #[test]
    fn corpus_round_trip() {
        let docs = vec![
            RawDocument {
                label: Some("sci.med".to_string()),
                text: "doctor patient doctor".to_string(),
            },
            RawDocument {
                label: None,
                text: "patient treatment".to_string(),
            },
        ];
        let corpus = preprocess(&docs, &PreprocessOptions::none()).unwrap();
        let text = write_corpus(&corpus, &["config: min_count=1".to_string()]);
        let back = read_corpus(&text).unwrap();
        assert_eq!(corpus, back);
        // serialization is stable byte-for-byte
        assert_eq!(text, write_corpus(&back, &["config: min_count=1".to_string()]));
    }

    #[test]
    fn directory_corpus_loads_labels_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        for (class, files) in [("sci.med", 2), ("sci.crypt", 1)] {
            let sub = root.join(class);
            fs::create_dir(&sub).unwrap();
            for i in 0..files {
                fs::write(
                    sub.join(format!("doc{i}.txt")),
                    format!("body text {class} {i}"),
                )
                .unwrap();
            }
        }
        let corpus = load_directory_corpus(root).unwrap();
        assert_eq!(corpus.documents.len(), 3);
        let labels: Vec<_> = corpus
            .documents
            .iter()
            .map(|d| d.label.clone().unwrap())
            .collect();
        assert_eq!(labels, ["sci.crypt", "sci.med", "sci.med"]);
        let again = load_directory_corpus(root).unwrap();
        assert_eq!(write_corpus(&corpus, &[]), write_corpus(&again, &[]));
    }

    #[test]
    fn directory_corpus_missing_root_errors() {
        let err = load_directory_corpus(Path::new("/nonexistent/hlsm-test")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn stopword_list_has_163_entries() {
        assert_eq!(default_stopwords().len(), 163);
    }

    #[test]
    fn line_corpus_parses_optional_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("docs.txt");
        fs::write(&path, "sci.med\tdoctor patient\nplain unlabeled text\n").unwrap();
        let docs = load_line_raw(&path).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].label.as_deref(), Some("sci.med"));
        assert_eq!(docs[1].label, None);
    }
}

//! The pruned word network: cosine association in the latent space for
//! every pair of words that co-occur in at least one document, thresholded
//! at q, plus the `HLSM-GRAPH v1` edge-list format.

use crate::error::{Error, Result};
use crate::format;
use crate::lsa::{TermDocMatrix, WordEmbedding};
use rayon::prelude::*;
use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

pub const GRAPH_HEADER: &str = "HLSM-GRAPH v1";

/// Weighted undirected word network. Nodes are vocabulary word ids; words
/// with no surviving edge are carried in `isolated_words` because the topic
/// refinement stage folds them back in.
#[derive(Debug, Clone, PartialEq)]
pub struct WordGraph {
    pub node_ids: Vec<u32>,
    /// (i, j, weight) with i < j, deduplicated, all weights above threshold.
    pub edges: Vec<(u32, u32, f64)>,
    pub isolated_words: Vec<u32>,
}

impl WordGraph {
    /// Builds a graph directly from an edge list; useful for standalone
    /// clustering runs and tests.
    pub fn from_edges(mut edges: Vec<(u32, u32, f64)>, isolated_words: Vec<u32>) -> Self {
        for edge in &mut edges {
            if edge.0 > edge.1 {
                std::mem::swap(&mut edge.0, &mut edge.1);
            }
        }
        edges.sort_by_key(|e| (e.0, e.1));
        edges.dedup_by_key(|e| (e.0, e.1));
        edges.retain(|e| e.0 != e.1);
        let mut node_ids: Vec<u32> = edges.iter().flat_map(|&(i, j, _)| [i, j]).collect();
        node_ids.sort_unstable();
        node_ids.dedup();
        WordGraph {
            node_ids,
            edges,
            isolated_words,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// All unordered word pairs (i < j) that share at least one document.
/// Similarity is only ever computed for these, never all-against-all.
pub fn cooccurring_pairs(m: &TermDocMatrix) -> Vec<(u32, u32)> {
    let mut seen: HashSet<u64> = HashSet::new();
    for j in 0..m.cols() as u32 {
        let words = m.doc_word_ids(j);
        for (a, &wi) in words.iter().enumerate() {
            for &wj in &words[a + 1..] {
                let (lo, hi) = if wi < wj { (wi, wj) } else { (wj, wi) };
                seen.insert(((lo as u64) << 32) | hi as u64);
            }
        }
    }
    let mut pairs: Vec<(u32, u32)> = seen
        .into_iter()
        .map(|key| ((key >> 32) as u32, key as u32))
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Cosine of the two embedding rows; errors if either row has zero norm.
pub fn cosine_similarity(e: &WordEmbedding, i: u32, j: u32) -> Result<f64> {
    let a = e.word_vector(i)?;
    let b = e.word_vector(j)?;
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        let word = if na == 0.0 { i } else { j };
        return Err(Error::ZeroNormVector {
            word: word.to_string(),
        });
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Keeps the pairs whose association exceeds `q`; zero-norm words are
/// treated as isolated rather than failing the build. `vocab_size` defines
/// the id range isolated words are drawn from.
pub fn build_graph(
    e: &WordEmbedding,
    pairs: &[(u32, u32)],
    q: f64,
    vocab_size: usize,
) -> Result<WordGraph> {
    if !(-1.0..1.0).contains(&q) {
        return Err(Error::InvalidParameter {
            name: "threshold",
            reason: format!("{q} is not in [-1, 1)"),
        });
    }
    let edges: Vec<(u32, u32, f64)> = pairs
        .par_iter()
        .filter_map(|&(i, j)| match cosine_similarity(e, i, j) {
            Ok(s) if s > q => Some((i, j, s)),
            _ => None,
        })
        .collect();
    let mut connected = vec![false; vocab_size];
    for &(i, j, _) in &edges {
        connected[i as usize] = true;
        connected[j as usize] = true;
    }
    let node_ids: Vec<u32> = (0..vocab_size as u32)
        .filter(|&w| connected[w as usize])
        .collect();
    let isolated_words: Vec<u32> = (0..vocab_size as u32)
        .filter(|&w| !connected[w as usize])
        .collect();
    Ok(WordGraph {
        node_ids,
        edges,
        isolated_words,
    })
}

/// Serializes the `HLSM-GRAPH v1` format. `names` maps a node id to its
/// label in the dump (the vocabulary word in the pipeline).
pub fn write_graph(
    graph: &WordGraph,
    names: impl Fn(u32) -> String,
    comments: &[String],
) -> String {
    let mut out = String::new();
    out.push_str(GRAPH_HEADER);
    out.push('\n');
    for comment in comments {
        let _ = writeln!(out, "# {comment}");
    }
    for &(i, j, w) in &graph.edges {
        let _ = writeln!(out, "{}\t{}\t{}", names(i), names(j), format::sig9(w));
    }
    if !graph.isolated_words.is_empty() {
        let ids: Vec<String> = graph.isolated_words.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "# isolated: {}", ids.join(","));
    }
    out
}

pub fn write_graph_file(
    graph: &WordGraph,
    names: impl Fn(u32) -> String,
    path: &Path,
    comments: &[String],
) -> Result<()> {
    format::write_file(path, &write_graph(graph, names, comments))
}

/// Parses the `HLSM-GRAPH v1` format. Node labels are interned in first-seen
/// order; the label table is returned alongside the graph.
pub fn read_graph(text: &str) -> Result<(WordGraph, Vec<String>)> {
    let lines = format::body_lines(text, GRAPH_HEADER, Some("# isolated:"))?;
    let mut names: Vec<String> = Vec::new();
    let mut ids: std::collections::HashMap<String, u32> = std::collections::HashMap::new();
    let mut edges = Vec::new();
    let mut isolated = Vec::new();
    for (line_no, line) in lines {
        if let Some(rest) = line.strip_prefix("# isolated:") {
            for id in rest.trim().split(',').filter(|s| !s.is_empty()) {
                let id: u32 = id.trim().parse().map_err(|_| Error::Format {
                    format: GRAPH_HEADER,
                    line: line_no,
                    reason: format!("bad isolated id {id:?}"),
                })?;
                isolated.push(id);
            }
            continue;
        }
        let mut parts = line.split('\t');
        let (a, b, w) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(w)) => (a, b, w),
            _ => {
                return Err(Error::Format {
                    format: GRAPH_HEADER,
                    line: line_no,
                    reason: "expected word_i<TAB>word_j<TAB>weight".to_string(),
                })
            }
        };
        let weight: f64 = w.parse().map_err(|_| Error::Format {
            format: GRAPH_HEADER,
            line: line_no,
            reason: format!("bad weight {w:?}"),
        })?;
        let mut intern = |name: &str, names: &mut Vec<String>| -> u32 {
            if let Some(&id) = ids.get(name) {
                return id;
            }
            let id = names.len() as u32;
            names.push(name.to_string());
            ids.insert(name.to_string(), id);
            id
        };
        let i = intern(a, &mut names);
        let j = intern(b, &mut names);
        edges.push((i, j, weight));
    }
    Ok((WordGraph::from_edges(edges, isolated), names))
}

pub fn read_graph_file(path: &Path) -> Result<(WordGraph, Vec<String>)> {
    read_graph(&format::read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{preprocess, PreprocessOptions, RawDocument};
    use crate::lsa::{build_term_doc_matrix, truncated_svd};
    use approx::assert_relative_eq;

    fn corpus_from(texts: &[&str]) -> crate::corpus::Corpus {
        let docs: Vec<RawDocument> = texts
            .iter()
            .map(|t| RawDocument {
                label: None,
                text: t.to_string(),
            })
            .collect();
        preprocess(&docs, &PreprocessOptions::none()).unwrap()
    }

    fn embedding_of(rows: &[&[f64]]) -> WordEmbedding {
        let rank = rows[0].len();
        let vectors: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        WordEmbedding::from_raw_parts(rows.len(), rank, vectors, vec![1.0; rank])
    }

    #[test]
    fn pairs_require_shared_document() {
        let corpus = corpus_from(&["aa bb", "cc"]);
        let m = build_term_doc_matrix(&corpus);
        let pairs = cooccurring_pairs(&m);
        let a = corpus.vocabulary.id("aa").unwrap();
        let b = corpus.vocabulary.id("bb").unwrap();
        assert_eq!(pairs, vec![(a.min(b), a.max(b))]);
    }

    #[test]
    fn four_distinct_words_give_six_pairs() {
        let corpus = corpus_from(&["aa bb cc dd"]);
        let m = build_term_doc_matrix(&corpus);
        assert_eq!(cooccurring_pairs(&m).len(), 6);
    }

    #[test]
    fn disjoint_documents_share_no_pairs() {
        let corpus = corpus_from(&["aa bb", "cc dd"]);
        let m = build_term_doc_matrix(&corpus);
        let pairs = cooccurring_pairs(&m);
        assert_eq!(pairs.len(), 2);
    }

    #[test]
    fn cosine_of_hand_vectors() {
        let e = embedding_of(&[&[1.0, 1.0], &[1.0, 0.0], &[-1.0, 0.0], &[2.0, 2.0]]);
        assert_relative_eq!(
            cosine_similarity(&e, 0, 1).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-9
        );
        assert_relative_eq!(cosine_similarity(&e, 0, 3).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(cosine_similarity(&e, 1, 2).unwrap(), -1.0, epsilon = 1e-12);
        // orthogonal vectors
        let e = embedding_of(&[&[1.0, 0.0], &[0.0, 3.0]]);
        assert_relative_eq!(cosine_similarity(&e, 0, 1).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cosine_zero_norm_is_an_error() {
        let e = embedding_of(&[&[0.0, 0.0], &[1.0, 0.0]]);
        assert!(matches!(
            cosine_similarity(&e, 0, 1),
            Err(Error::ZeroNormVector { .. })
        ));
    }

    #[test]
    fn threshold_rule_keeps_edges_strictly_above_q() {
        // vectors planted so S(a,b)=0.9, S(a,c)=0.5, S(b,c) low
        let a = [1.0, 0.0];
        let c = [0.5, 0.75f64.sqrt()];
        let ab = 0.9f64.acos();
        let b = [ab.cos(), -ab.sin()];
        let e = embedding_of(&[&a, &b, &c]);
        assert_relative_eq!(cosine_similarity(&e, 0, 1).unwrap(), 0.9, epsilon = 1e-9);
        assert_relative_eq!(cosine_similarity(&e, 0, 2).unwrap(), 0.5, epsilon = 1e-9);
        assert!(cosine_similarity(&e, 1, 2).unwrap() < 0.3);
        let pairs = vec![(0, 1), (0, 2), (1, 2)];
        let g = build_graph(&e, &pairs, 0.3, 3).unwrap();
        let kept: Vec<(u32, u32)> = g.edges.iter().map(|&(i, j, _)| (i, j)).collect();
        assert_eq!(kept, vec![(0, 1), (0, 2)]);
        assert!(g.isolated_words.is_empty());
    }

    #[test]
    fn extreme_threshold_isolates_most_words() {
        let corpus = corpus_from(&["aa bb cc", "aa bb dd", "cc dd ee"]);
        let m = build_term_doc_matrix(&corpus);
        let e = truncated_svd(&m, 2, 5).unwrap();
        let pairs = cooccurring_pairs(&m);
        let g = build_graph(&e, &pairs, 0.99999999, corpus.vocabulary.len()).unwrap();
        assert!(g.edge_count() < pairs.len());
        assert_eq!(
            g.node_count() + g.isolated_words.len(),
            corpus.vocabulary.len()
        );
    }

    #[test]
    fn no_pruning_at_minus_one() {
        let corpus = corpus_from(&["aa bb cc", "bb cc dd"]);
        let m = build_term_doc_matrix(&corpus);
        let e = truncated_svd(&m, 2, 5).unwrap();
        let pairs = cooccurring_pairs(&m);
        let g = build_graph(&e, &pairs, -1.0, corpus.vocabulary.len()).unwrap();
        assert_eq!(g.edge_count(), pairs.len());
    }

    #[test]
    fn edge_monotonicity_in_threshold() {
        let corpus = corpus_from(&[
            "aa bb cc dd",
            "aa bb ee",
            "cc dd ee ff",
            "ff aa cc",
            "bb dd ff",
        ]);
        let m = build_term_doc_matrix(&corpus);
        let e = truncated_svd(&m, 3, 9).unwrap();
        let pairs = cooccurring_pairs(&m);
        let loose = build_graph(&e, &pairs, 0.1, corpus.vocabulary.len()).unwrap();
        let tight = build_graph(&e, &pairs, 0.6, corpus.vocabulary.len()).unwrap();
        let loose_set: HashSet<(u32, u32)> =
            loose.edges.iter().map(|&(i, j, _)| (i, j)).collect();
        for &(i, j, _) in &tight.edges {
            assert!(loose_set.contains(&(i, j)));
        }
    }

    #[test]
    fn graph_round_trip() {
        let g = WordGraph::from_edges(
            vec![(0, 1, 0.875), (1, 2, 0.5), (0, 3, 0.333333333)],
            vec![4, 5],
        );
        let text = write_graph(&g, |id| format!("w{id}"), &["config: q=0.25".to_string()]);
        let (back, names) = read_graph(&text).unwrap();
        assert_eq!(back.edge_count(), 3);
        assert_eq!(back.isolated_words, vec![4, 5]);
        assert_eq!(names[0], "w0");
        for (orig, parsed) in g.edges.iter().zip(&back.edges) {
            assert_relative_eq!(orig.2, parsed.2, epsilon = 1e-9);
        }
    }

    #[test]
    fn invalid_threshold_is_rejected() {
        let e = embedding_of(&[&[1.0], &[1.0]]);
        assert!(build_graph(&e, &[(0, 1)], 1.0, 2).is_err());
        assert!(build_graph(&e, &[(0, 1)], -1.5, 2).is_err());
    }
}

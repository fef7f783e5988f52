//! Held-out evaluation: per-document topic inference with the trained
//! model held fixed, perplexity of a test corpus, topic-feature export for
//! downstream classifiers, and a nearest-centroid accuracy stand-in.

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};
use crate::format;
use crate::refine::TopicModel;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Probability floor applied per token inside the perplexity sum.
const PERPLEXITY_FLOOR: f64 = 1e-12;

/// Inferred p(t|d) for one document plus the fraction of its tokens the
/// model vocabulary covers. Features sum to 1 when coverage is nonzero and
/// are all-zero otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTopicFeatures {
    pub doc_id: u32,
    pub label: Option<String>,
    pub features: Vec<f64>,
    pub coverage: f64,
}

/// Sparse word-major index of p(w|t): for each word, its (topic, p(w|t))
/// entries and the marginal p(w) = Σ_t p(w|t)·p(t).
struct WordIndex {
    by_word: BTreeMap<u32, Vec<(u32, f64)>>,
    marginal: BTreeMap<u32, f64>,
}

impl WordIndex {
    fn build(model: &TopicModel) -> Self {
        let mut by_word: BTreeMap<u32, Vec<(u32, f64)>> = BTreeMap::new();
        for (topic, row) in model.word_given_topic.iter().enumerate() {
            for &(word, p) in row {
                by_word.entry(word).or_default().push((topic as u32, p));
            }
        }
        let marginal = by_word
            .iter()
            .map(|(&word, entries)| {
                let pw: f64 = entries
                    .iter()
                    .map(|&(t, p)| p * model.topic_prior[t as usize])
                    .sum();
                (word, pw)
            })
            .collect();
        WordIndex { by_word, marginal }
    }

    fn infer(&self, topic_prior: &[f64], doc: &Document) -> DocTopicFeatures {
        let mut features = vec![0.0; topic_prior.len()];
        let mut covered = 0u64;
        for (&word, &count) in &doc.token_counts {
            let Some(&pw) = self.marginal.get(&word) else {
                continue;
            };
            if pw <= 0.0 {
                continue;
            }
            covered += count as u64;
            // p(t|w) = p(t)·p(w|t) / p(w)
            for &(topic, p_wt) in &self.by_word[&word] {
                features[topic as usize] +=
                    count as f64 * topic_prior[topic as usize] * p_wt / pw;
            }
        }
        if covered == 0 {
            features.fill(0.0);
        } else {
            for f in &mut features {
                *f /= covered as f64;
            }
        }
        let coverage = if doc.length == 0 {
            0.0
        } else {
            covered as f64 / doc.length as f64
        };
        DocTopicFeatures {
            doc_id: doc.doc_id,
            label: doc.label.clone(),
            features,
            coverage,
        }
    }
}

/// Infers p(t|d) for one document: in-vocabulary tokens vote with
/// p(t|w) = p(t)·p(w|t)/p(w); out-of-vocabulary tokens are skipped and
/// reflected in `coverage`.
pub fn infer_doc_topics(model: &TopicModel, doc: &Document) -> DocTopicFeatures {
    WordIndex::build(model).infer(&model.topic_prior, doc)
}

/// Batched inference over a whole corpus.
pub fn infer_corpus(model: &TopicModel, corpus: &Corpus) -> Vec<DocTopicFeatures> {
    let index = WordIndex::build(model);
    corpus
        .documents
        .par_iter()
        .map(|doc| index.infer(&model.topic_prior, doc))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerplexityReport {
    pub perplexity: f64,
    /// In-vocabulary token count the estimate is averaged over.
    pub tokens: u64,
    /// Fraction of all test tokens that were in-vocabulary.
    pub coverage: f64,
}

impl std::fmt::Display for PerplexityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "perplexity={} tokens={} coverage={:.6}",
            self.perplexity, self.tokens, self.coverage
        )
    }
}

/// exp(−Σ_d log p(d) / Σ_d L'_d) over in-vocabulary tokens, with
/// log p(d) = Σ_w w_w^d · ln Σ_t p(w|t)·p(t|d) and p(t|d) inferred per
/// document. Errors when no test token is covered.
pub fn perplexity(model: &TopicModel, test: &Corpus) -> Result<PerplexityReport> {
    let index = WordIndex::build(model);
    let per_doc: Vec<(f64, u64)> = test
        .documents
        .par_iter()
        .map(|doc| {
            let inferred = index.infer(&model.topic_prior, doc);
            let mut log_p = 0.0;
            let mut tokens = 0u64;
            for (&word, &count) in &doc.token_counts {
                let Some(entries) = index.by_word.get(&word) else {
                    continue;
                };
                let mut p = 0.0;
                for &(topic, p_wt) in entries {
                    p += p_wt * inferred.features[topic as usize];
                }
                log_p += count as f64 * p.max(PERPLEXITY_FLOOR).ln();
                tokens += count as u64;
            }
            (log_p, tokens)
        })
        .collect();

    let total_log: f64 = per_doc.iter().map(|&(l, _)| l).sum();
    let covered: u64 = per_doc.iter().map(|&(_, t)| t).sum();
    if covered == 0 {
        return Err(Error::NoCoveredTokens);
    }
    let all_tokens = test.total_tokens();
    Ok(PerplexityReport {
        perplexity: (-total_log / covered as f64).exp(),
        tokens: covered,
        coverage: covered as f64 / all_tokens as f64,
    })
}

/// Writes the per-document feature CSV:
/// `doc_id,label,coverage,t0,...,t{K-1}`, floats at 6 decimals, ordered by
/// doc id.
pub fn export_features(model: &TopicModel, corpus: &Corpus, out_path: &Path) -> Result<()> {
    let mut rows = infer_corpus(model, corpus);
    rows.sort_by_key(|r| r.doc_id);
    let mut out = String::new();
    out.push_str("doc_id,label,coverage");
    for t in 0..model.topic_count {
        let _ = write!(out, ",t{t}");
    }
    out.push('\n');
    for row in &rows {
        let _ = write!(
            out,
            "{},{},{:.6}",
            row.doc_id,
            row.label.as_deref().unwrap_or(""),
            row.coverage
        );
        for &f in &row.features {
            let _ = write!(out, ",{f:.6}");
        }
        out.push('\n');
    }
    format::write_file(out_path, &out)
}

/// Desk-scale classification check: stratified train/test split of the
/// labeled feature vectors, one centroid per label, nearest centroid by
/// Euclidean distance. Deterministic for a fixed seed.
pub fn nearest_centroid_accuracy(
    features: &[DocTopicFeatures],
    train_fraction: f64,
    seed: u64,
) -> Result<f64> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter {
            name: "train_fraction",
            reason: format!("{train_fraction} is not in (0, 1)"),
        });
    }
    let mut by_label: BTreeMap<&str, Vec<&DocTopicFeatures>> = BTreeMap::new();
    for feature in features {
        if let Some(label) = feature.label.as_deref() {
            by_label.entry(label).or_default().push(feature);
        }
    }
    if by_label.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "features",
            reason: format!("need at least 2 labels, found {}", by_label.len()),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut test_set: Vec<&DocTopicFeatures> = Vec::new();
    for (label, group) in &by_label {
        let mut shuffled = group.clone();
        shuffled.sort_by_key(|f| f.doc_id);
        shuffled.shuffle(&mut rng);
        let train_count = ((group.len() as f64) * train_fraction).round() as usize;
        let train_count = train_count.min(group.len());
        if train_count == 0 {
            return Err(Error::EmptyLabelSplit {
                label: label.to_string(),
            });
        }
        let dims = shuffled[0].features.len();
        let mut centroid = vec![0.0; dims];
        for f in &shuffled[..train_count] {
            for (c, &x) in centroid.iter_mut().zip(&f.features) {
                *c += x;
            }
        }
        for c in &mut centroid {
            *c /= train_count as f64;
        }
        centroids.insert(label, centroid);
        test_set.extend(shuffled[train_count..].iter().copied());
    }
    if test_set.is_empty() {
        return Err(Error::InvalidParameter {
            name: "train_fraction",
            reason: "split left no test documents".to_string(),
        });
    }

    let mut correct = 0usize;
    for doc in &test_set {
        let mut best: Option<(&str, f64)> = None;
        for (label, centroid) in &centroids {
            let dist: f64 = centroid
                .iter()
                .zip(&doc.features)
                .map(|(c, x)| (c - x) * (c - x))
                .sum();
            match best {
                Some((_, best_dist)) if dist >= best_dist => {}
                _ => best = Some((label, dist)),
            }
        }
        if best.map(|(label, _)| label) == doc.label.as_deref() {
            correct += 1;
        }
    }
    Ok(correct as f64 / test_set.len() as f64)
}

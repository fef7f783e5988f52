//! Topic refinement: turns the hard word partition from clustering into a
//! probabilistic topic model. Leaf modules seed topics with indicator
//! word-topic assignments; isolated words are folded into each document's
//! most significant topic (smallest binomial tail p-value); then a sweep of
//! the infrequent-topic cutoff η from 0 to 0.5 in steps of 0.01 keeps the
//! reassignment with the best log-likelihood.

use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::format;
use rayon::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub const MODEL_HEADER: &str = "HLSM-MODEL v1";

/// η grid of the sweep: 0.00, 0.01, ..., 0.50.
pub const ETA_STEPS: usize = 51;

/// Upper tail P(X >= x) for X ~ Binomial(n, p).
pub fn binomial_tail(x: u64, n: u64, p: f64) -> f64 {
    if x == 0 {
        return 1.0;
    }
    if x > n || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let dist = Binomial::new(p, n).expect("probability validated above");
    dist.sf(x - 1)
}

/// Hard per-document topic assignment of word tokens plus the derived
/// count statistics. All counts are integers so conservation is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicAssignmentState {
    topic_count: usize,
    /// per document: word_id -> topic carrying all of that word's tokens
    token_topic: Vec<BTreeMap<u32, u32>>,
    /// n(w, t): tokens of word w assigned to topic t, summed over documents
    n_wt: Vec<BTreeMap<u32, u64>>,
    /// per document: topic -> token count
    doc_topic_tokens: Vec<BTreeMap<u32, u32>>,
    doc_lengths: Vec<u32>,
    /// L_C: total tokens over the corpus being modeled
    total_tokens: u64,
    /// empirical unigram p(w) over the corpus being modeled
    p_word: Vec<f64>,
    /// p(t) = Σ_w p(w)·p(t|w), recomputed per refinement stage
    topic_prior: Vec<f64>,
}

impl TopicAssignmentState {
    pub fn topic_count(&self) -> usize {
        self.topic_count
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn doc_count(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn n_wt(&self, word_id: u32, topic: u32) -> u64 {
        self.n_wt
            .get(word_id as usize)
            .and_then(|row| row.get(&topic))
            .copied()
            .unwrap_or(0)
    }

    /// Σ_{w,t} n(w,t); equals `total_tokens` once every token is assigned.
    pub fn assigned_tokens(&self) -> u64 {
        self.n_wt.iter().map(|row| row.values().sum::<u64>()).sum()
    }

    pub fn topic_of(&self, doc_id: u32, word_id: u32) -> Option<u32> {
        self.token_topic[doc_id as usize].get(&word_id).copied()
    }

    pub fn topic_prior(&self) -> &[f64] {
        &self.topic_prior
    }

    /// p(t|d) as a dense vector over topics.
    pub fn doc_topic(&self, doc_id: u32) -> Vec<f64> {
        let mut out = vec![0.0; self.topic_count];
        let length = self.doc_lengths[doc_id as usize] as f64;
        for (&topic, &count) in &self.doc_topic_tokens[doc_id as usize] {
            out[topic as usize] = count as f64 / length;
        }
        out
    }

    /// p(w|t) rows computed from the counts (sparse, sorted by word id).
    fn word_given_topic(&self) -> Vec<Vec<(u32, f64)>> {
        let mut topic_totals = vec![0u64; self.topic_count];
        for row in &self.n_wt {
            for (&topic, &count) in row {
                topic_totals[topic as usize] += count;
            }
        }
        let mut out: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.topic_count];
        for (word, row) in self.n_wt.iter().enumerate() {
            for (&topic, &count) in row {
                let total = topic_totals[topic as usize];
                if count > 0 && total > 0 {
                    out[topic as usize].push((word as u32, count as f64 / total as f64));
                }
            }
        }
        out
    }

    fn recompute_prior(&mut self) {
        let mut prior = vec![0.0; self.topic_count];
        for (word, row) in self.n_wt.iter().enumerate() {
            let total: u64 = row.values().sum();
            if total == 0 {
                continue;
            }
            for (&topic, &count) in row {
                prior[topic as usize] += self.p_word[word] * count as f64 / total as f64;
            }
        }
        self.topic_prior = prior;
    }
}

/// Seeds the state from the leaf-module word partition: topic t is leaf t,
/// every token of a leaf word carries that topic, isolated words stay
/// unassigned until [`assign_singletons`].
pub fn initial_topics(corpus: &Corpus, leaves: &[Vec<u32>]) -> Result<TopicAssignmentState> {
    let n_words = corpus.vocabulary.len();
    let mut leaf_of = vec![u32::MAX; n_words];
    for (topic, leaf) in leaves.iter().enumerate() {
        for &word in leaf {
            if word as usize >= n_words {
                return Err(Error::PartitionMismatch {
                    reason: format!("leaf word {word} outside the vocabulary"),
                });
            }
            if leaf_of[word as usize] != u32::MAX {
                return Err(Error::PartitionMismatch {
                    reason: format!("word {word} appears in two leaves"),
                });
            }
            leaf_of[word as usize] = topic as u32;
        }
    }

    let mut token_topic = Vec::with_capacity(corpus.documents.len());
    let mut doc_topic_tokens = Vec::with_capacity(corpus.documents.len());
    let mut doc_lengths = Vec::with_capacity(corpus.documents.len());
    let mut n_wt: Vec<BTreeMap<u32, u64>> = vec![BTreeMap::new(); n_words];
    let mut word_totals = vec![0u64; n_words];
    let mut total_tokens = 0u64;
    for doc in &corpus.documents {
        let mut assignments = BTreeMap::new();
        let mut topic_tokens: BTreeMap<u32, u32> = BTreeMap::new();
        for (&word, &count) in &doc.token_counts {
            word_totals[word as usize] += count as u64;
            let topic = leaf_of[word as usize];
            if topic != u32::MAX {
                assignments.insert(word, topic);
                *topic_tokens.entry(topic).or_insert(0) += count;
                *n_wt[word as usize].entry(topic).or_insert(0) += count as u64;
            }
        }
        token_topic.push(assignments);
        doc_topic_tokens.push(topic_tokens);
        doc_lengths.push(doc.length);
        total_tokens += doc.length as u64;
    }

    let p_word: Vec<f64> = word_totals
        .iter()
        .map(|&c| c as f64 / total_tokens as f64)
        .collect();
    let mut state = TopicAssignmentState {
        topic_count: leaves.len(),
        token_topic,
        n_wt,
        doc_topic_tokens,
        doc_lengths,
        total_tokens,
        p_word,
        topic_prior: Vec::new(),
    };
    state.recompute_prior();
    Ok(state)
}

/// Binomial-tail significance of topic `t` in document `d`: P(X >= x) for
/// X ~ Binomial(L_d, p(t)), x being the tokens of `t` currently in `d`.
pub fn topic_significance(state: &TopicAssignmentState, doc_id: u32, topic: u32) -> f64 {
    let x = state.doc_topic_tokens[doc_id as usize]
        .get(&topic)
        .copied()
        .unwrap_or(0) as u64;
    let n = state.doc_lengths[doc_id as usize] as u64;
    let p = state.topic_prior[topic as usize].clamp(0.0, 1.0);
    binomial_tail(x, n, p)
}

/// Most significant topic present in the document: smallest p-value, ties
/// broken by larger token count, then smaller topic id. None when the
/// document has no assigned tokens yet.
fn most_significant_topic(state: &TopicAssignmentState, doc_id: u32) -> Option<u32> {
    let mut best: Option<(f64, u32, u32)> = None;
    for (&topic, &count) in &state.doc_topic_tokens[doc_id as usize] {
        if count == 0 {
            continue;
        }
        let p_value = topic_significance(state, doc_id, topic);
        let replace = match best {
            None => true,
            Some((best_p, best_count, best_topic)) => {
                if !approx_eq(p_value, best_p) {
                    p_value < best_p
                } else if count != best_count {
                    count > best_count
                } else {
                    topic < best_topic
                }
            }
        };
        if replace {
            best = Some((p_value, count, topic));
        }
    }
    best.map(|(_, _, topic)| topic)
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Folds isolated words into the per-document most significant topic and
/// returns the refinement baseline. Documents consisting entirely of
/// isolated words take the globally largest-prior topic.
pub fn assign_singletons(
    state: &TopicAssignmentState,
    corpus: &Corpus,
    isolated: &[u32],
) -> TopicAssignmentState {
    let mut out = state.clone();
    let mut is_isolated = vec![false; corpus.vocabulary.len()];
    for &w in isolated {
        if (w as usize) < is_isolated.len() {
            is_isolated[w as usize] = true;
        }
    }
    let fallback_topic = state
        .topic_prior
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
        .map(|(t, _)| t as u32)
        .unwrap_or(0);

    for doc in &corpus.documents {
        // a word already assigned through a leaf is never treated as
        // isolated, whatever the caller passed
        let pending: Vec<(u32, u32)> = doc
            .token_counts
            .iter()
            .filter(|(&w, _)| {
                is_isolated[w as usize] && !state.token_topic[doc.doc_id as usize].contains_key(&w)
            })
            .map(|(&w, &c)| (w, c))
            .collect();
        if pending.is_empty() {
            continue;
        }
        // significance judged against the pre-assignment state
        let target = most_significant_topic(state, doc.doc_id).unwrap_or(fallback_topic);
        let doc_idx = doc.doc_id as usize;
        for (word, count) in pending {
            out.token_topic[doc_idx].insert(word, target);
            *out.doc_topic_tokens[doc_idx].entry(target).or_insert(0) += count;
            *out.n_wt[word as usize].entry(target).or_insert(0) += count as u64;
        }
    }
    out.recompute_prior();
    out
}

/// Mixture log-likelihood of the current assignment (natural log):
/// L = Σ_d Σ_w w_w^d · ln Σ_t p(w|t)·p(t|d), per-token probabilities
/// floored at 1e-300.
pub fn likelihood(state: &TopicAssignmentState, corpus: &Corpus) -> f64 {
    let mut topic_totals = vec![0u64; state.topic_count];
    for row in &state.n_wt {
        for (&topic, &count) in row {
            topic_totals[topic as usize] += count;
        }
    }
    // per-document terms are collected in document order and reduced
    // sequentially so the float sum is identical across thread counts
    let per_doc: Vec<f64> = corpus
        .documents
        .par_iter()
        .map(|doc| {
            let doc_idx = doc.doc_id as usize;
            let length = state.doc_lengths[doc_idx] as f64;
            let doc_topics: Vec<(u32, f64)> = state.doc_topic_tokens[doc_idx]
                .iter()
                .map(|(&t, &c)| (t, c as f64 / length))
                .collect();
            let mut sum = 0.0;
            for (&word, &count) in &doc.token_counts {
                let row = &state.n_wt[word as usize];
                let mut p = 0.0;
                for &(topic, p_td) in &doc_topics {
                    if let Some(&n) = row.get(&topic) {
                        let total = topic_totals[topic as usize];
                        if total > 0 {
                            p += (n as f64 / total as f64) * p_td;
                        }
                    }
                }
                sum += count as f64 * p.max(1e-300).ln();
            }
            sum
        })
        .collect();
    per_doc.iter().sum()
}

/// Applies one η cutoff to a fresh copy of the baseline: per document, all
/// topics with p(t|d) < η lose their tokens to that document's most
/// significant topic (which is itself exempt from reassignment). The
/// baseline's priors stay fixed throughout.
pub fn eta_reassign(
    baseline: &TopicAssignmentState,
    corpus: &Corpus,
    eta: f64,
) -> Result<TopicAssignmentState> {
    if !(0.0..=0.5).contains(&eta) {
        return Err(Error::InvalidParameter {
            name: "eta",
            reason: format!("{eta} is not in [0, 0.5]"),
        });
    }
    let mut out = baseline.clone();
    for doc in &corpus.documents {
        let doc_idx = doc.doc_id as usize;
        let Some(target) = most_significant_topic(baseline, doc.doc_id) else {
            continue;
        };
        let length = baseline.doc_lengths[doc_idx] as f64;
        let infrequent: Vec<u32> = baseline.doc_topic_tokens[doc_idx]
            .iter()
            .filter(|&(&t, &count)| t != target && (count as f64 / length) < eta)
            .map(|(&t, _)| t)
            .collect();
        if infrequent.is_empty() {
            continue;
        }
        let moved: Vec<(u32, u32, u32)> = out.token_topic[doc_idx]
            .iter()
            .filter(|(_, t)| infrequent.contains(t))
            .map(|(&w, &t)| (w, t, doc.count(w)))
            .collect();
        for (word, from, count) in moved {
            out.token_topic[doc_idx].insert(word, target);
            let doc_counts = &mut out.doc_topic_tokens[doc_idx];
            let remaining = doc_counts[&from] - count;
            if remaining == 0 {
                doc_counts.remove(&from);
            } else {
                *doc_counts.get_mut(&from).unwrap() = remaining;
            }
            *doc_counts.entry(target).or_insert(0) += count;
            let row = &mut out.n_wt[word as usize];
            let left = row[&from] - count as u64;
            if left == 0 {
                row.remove(&from);
            } else {
                *row.get_mut(&from).unwrap() = left;
            }
            *row.entry(target).or_insert(0) += count as u64;
        }
    }
    Ok(out)
}

/// The trained topic model: p(w|t) rows (sparse; omitted entries are
/// exactly zero), p(t), the selected η and the final log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub topic_count: usize,
    /// per topic: (word_id, p(w|t)) sorted by word id
    pub word_given_topic: Vec<Vec<(u32, f64)>>,
    pub topic_prior: Vec<f64>,
    pub eta_selected: f64,
    pub log_likelihood: f64,
}

impl TopicModel {
    pub fn p_word_given_topic(&self, topic: u32, word: u32) -> f64 {
        let row = &self.word_given_topic[topic as usize];
        match row.binary_search_by_key(&word, |&(w, _)| w) {
            Ok(pos) => row[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Word-major view: per word, the (topic, p(w|t)) pairs.
    pub fn word_major(&self, n_words: usize) -> Vec<Vec<(u32, f64)>> {
        let mut out: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_words];
        for (topic, row) in self.word_given_topic.iter().enumerate() {
            for &(word, p) in row {
                out[word as usize].push((topic as u32, p));
            }
        }
        out
    }
}

/// Evaluates every η in the grid independently against the baseline and
/// keeps the maximum-likelihood model (ties resolved to the smallest η).
/// Topics left without any token are dropped from the final model.
pub fn sweep_eta(baseline: &TopicAssignmentState, corpus: &Corpus) -> Result<TopicModel> {
    let candidates: Vec<(f64, f64, TopicAssignmentState)> = (0..ETA_STEPS)
        .into_par_iter()
        .map(|step| {
            let eta = step as f64 / 100.0;
            let state = eta_reassign(baseline, corpus, eta)?;
            let log_l = likelihood(&state, corpus);
            Ok((eta, log_l, state))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0usize;
    for (idx, candidate) in candidates.iter().enumerate() {
        if candidate.1 > candidates[best].1 {
            best = idx;
        }
    }
    let (eta, log_l, mut state) = candidates.into_iter().nth(best).expect("grid nonempty");
    state.recompute_prior();
    Ok(build_model(&state, eta, log_l))
}

fn build_model(state: &TopicAssignmentState, eta: f64, log_likelihood: f64) -> TopicModel {
    let rows = state.word_given_topic();
    let mut word_given_topic = Vec::new();
    let mut topic_prior = Vec::new();
    for (topic, row) in rows.into_iter().enumerate() {
        if row.is_empty() {
            continue;
        }
        word_given_topic.push(row);
        topic_prior.push(state.topic_prior[topic]);
    }
    // dropped topics carry no tokens and no prior mass beyond float residue
    let mass: f64 = topic_prior.iter().sum();
    if mass > 0.0 {
        for p in &mut topic_prior {
            *p /= mass;
        }
    }
    TopicModel {
        topic_count: word_given_topic.len(),
        word_given_topic,
        topic_prior,
        eta_selected: eta,
        log_likelihood,
    }
}

/// One row of the ranked topics table.
#[derive(Debug, Clone)]
pub struct TopicSummary {
    pub topic_id: u32,
    pub prior: f64,
    /// (word_id, p(w|t)) ranked by probability, ties by word id.
    pub top_words: Vec<(u32, f64)>,
}

/// Topics ranked by p(t) with their top-n words ranked by p(w|t).
pub fn topics_table(model: &TopicModel, top_n: usize) -> Result<Vec<TopicSummary>> {
    if top_n < 1 {
        return Err(Error::InvalidParameter {
            name: "top_n",
            reason: "must be at least 1".to_string(),
        });
    }
    let mut order: Vec<usize> = (0..model.topic_count).collect();
    order.sort_by(|&a, &b| {
        model.topic_prior[b]
            .partial_cmp(&model.topic_prior[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    Ok(order
        .into_iter()
        .map(|topic| {
            let mut words = model.word_given_topic[topic].clone();
            words.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            words.truncate(top_n);
            TopicSummary {
                topic_id: topic as u32,
                prior: model.topic_prior[topic],
                top_words: words,
            }
        })
        .collect())
}

/// Serializes the `HLSM-MODEL v1` format.
pub fn write_model(model: &TopicModel, vocabulary: &Vocabulary, comments: &[String]) -> String {
    let mut out = String::new();
    out.push_str(MODEL_HEADER);
    out.push('\n');
    for comment in comments {
        let _ = writeln!(out, "# {comment}");
    }
    let _ = writeln!(out, "topic_count\t{}", model.topic_count);
    let _ = writeln!(out, "eta_selected\t{:.2}", model.eta_selected);
    let _ = writeln!(out, "log_likelihood\t{}", format::sig9(model.log_likelihood));
    out.push_str("PRIORS\n");
    for (topic, &prior) in model.topic_prior.iter().enumerate() {
        let _ = writeln!(out, "{topic}\t{}", format::sig9(prior));
    }
    out.push_str("TOPICS\n");
    for (topic, row) in model.word_given_topic.iter().enumerate() {
        for &(word, p) in row {
            let _ = writeln!(out, "{topic}\t{}\t{}", vocabulary.word(word), format::sig9(p));
        }
    }
    out
}

pub fn write_model_file(
    model: &TopicModel,
    vocabulary: &Vocabulary,
    path: &Path,
    comments: &[String],
) -> Result<()> {
    format::write_file(path, &write_model(model, vocabulary, comments))
}

/// Parses the `HLSM-MODEL v1` format, resolving words through `vocabulary`.
pub fn read_model(text: &str, vocabulary: &Vocabulary) -> Result<TopicModel> {
    let fmt_err = |line: usize, reason: String| Error::Format {
        format: MODEL_HEADER,
        line,
        reason,
    };
    let lines = format::body_lines(text, MODEL_HEADER, None)?;
    let mut topic_count: Option<usize> = None;
    let mut eta_selected = 0.0;
    let mut log_likelihood = 0.0;
    let mut priors: Vec<(u32, f64)> = Vec::new();
    let mut rows: Vec<(u32, u32, f64)> = Vec::new();

    enum Section {
        Header,
        Priors,
        Topics,
    }
    let mut section = Section::Header;
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        match line {
            "PRIORS" => {
                section = Section::Priors;
                continue;
            }
            "TOPICS" => {
                section = Section::Topics;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Header => {
                let (key, value) = line
                    .split_once('\t')
                    .ok_or_else(|| fmt_err(line_no, "expected key<TAB>value".to_string()))?;
                match key {
                    "topic_count" => {
                        topic_count = Some(value.parse().map_err(|_| {
                            fmt_err(line_no, format!("bad topic_count {value:?}"))
                        })?)
                    }
                    "eta_selected" => {
                        eta_selected = value
                            .parse()
                            .map_err(|_| fmt_err(line_no, format!("bad eta {value:?}")))?
                    }
                    "log_likelihood" => {
                        log_likelihood = value.parse().map_err(|_| {
                            fmt_err(line_no, format!("bad log_likelihood {value:?}"))
                        })?
                    }
                    other => return Err(fmt_err(line_no, format!("unknown key {other:?}"))),
                }
            }
            Section::Priors => {
                let (topic, p) = line
                    .split_once('\t')
                    .ok_or_else(|| fmt_err(line_no, "expected topic<TAB>p".to_string()))?;
                let topic: u32 = topic
                    .parse()
                    .map_err(|_| fmt_err(line_no, format!("bad topic id {topic:?}")))?;
                let p: f64 = p
                    .parse()
                    .map_err(|_| fmt_err(line_no, format!("bad prior {p:?}")))?;
                priors.push((topic, p));
            }
            Section::Topics => {
                let mut parts = line.split('\t');
                let (topic, word, p) = match (parts.next(), parts.next(), parts.next()) {
                    (Some(t), Some(w), Some(p)) => (t, w, p),
                    _ => {
                        return Err(fmt_err(
                            line_no,
                            "expected topic<TAB>word<TAB>p".to_string(),
                        ))
                    }
                };
                let topic: u32 = topic
                    .parse()
                    .map_err(|_| fmt_err(line_no, format!("bad topic id {topic:?}")))?;
                let word_id = vocabulary.id(word).ok_or(Error::VocabularyMismatch)?;
                let p: f64 = p
                    .parse()
                    .map_err(|_| fmt_err(line_no, format!("bad probability {p:?}")))?;
                rows.push((topic, word_id, p));
            }
        }
    }

    let topic_count = topic_count.ok_or_else(|| fmt_err(0, "missing topic_count".to_string()))?;
    let mut topic_prior = vec![0.0; topic_count];
    for (topic, p) in priors {
        if topic as usize >= topic_count {
            return Err(fmt_err(0, format!("prior topic {topic} out of range")));
        }
        topic_prior[topic as usize] = p;
    }
    let mut word_given_topic: Vec<Vec<(u32, f64)>> = vec![Vec::new(); topic_count];
    for (topic, word, p) in rows {
        if topic as usize >= topic_count {
            return Err(fmt_err(0, format!("topic {topic} out of range")));
        }
        word_given_topic[topic as usize].push((word, p));
    }
    for row in &mut word_given_topic {
        row.sort_by_key(|&(w, _)| w);
    }
    Ok(TopicModel {
        topic_count,
        word_given_topic,
        topic_prior,
        eta_selected,
        log_likelihood,
    })
}

pub fn read_model_file(path: &Path, vocabulary: &Vocabulary) -> Result<TopicModel> {
    read_model(&format::read_file(path)?, vocabulary)
}

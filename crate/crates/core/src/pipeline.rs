//! End-to-end training wiring: count matrix, embedding, word network,
//! hierarchical clustering, refinement. The CLI wraps this with artifact
//! persistence; tests drive it directly.

use crate::corpus::Corpus;
use crate::error::Result;
use crate::graph::{self, WordGraph};
use crate::lsa;
use crate::mapeq::{self, HierarchyPartition};
use crate::refine::{self, TopicModel};

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    /// Embedding rank; `None` selects min(100, min(N_w, N) − 1).
    pub svd_rank: Option<usize>,
    /// Association threshold q; edges need similarity strictly above it.
    pub threshold: f64,
    pub seed: u64,
    /// Cap on the clustering search's outer move-and-aggregate iterations.
    pub max_iters: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            svd_rank: None,
            threshold: 0.25,
            seed: 0,
            max_iters: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub embedding: lsa::WordEmbedding,
    pub graph: WordGraph,
    pub hierarchy: HierarchyPartition,
    pub model: TopicModel,
}

pub fn default_rank(n_words: usize, n_docs: usize) -> usize {
    100.min(n_words.min(n_docs).saturating_sub(1)).max(1)
}

/// Runs the full training pipeline on a preprocessed corpus.
///
/// Degenerate graphs are survivable: when every word is isolated (for
/// example at an extreme threshold) the model falls back to one topic
/// holding the entire vocabulary.
pub fn train(corpus: &Corpus, options: &TrainOptions) -> Result<TrainedModel> {
    let matrix = lsa::build_term_doc_matrix(corpus);
    let rank = options
        .svd_rank
        .unwrap_or_else(|| default_rank(matrix.rows(), matrix.cols()));
    let embedding = lsa::truncated_svd(&matrix, rank, options.seed)?;
    let pairs = graph::cooccurring_pairs(&matrix);
    let word_graph = graph::build_graph(
        &embedding,
        &pairs,
        options.threshold,
        corpus.vocabulary.len(),
    )?;

    let (hierarchy, leaves, isolated) = if word_graph.edges.is_empty() {
        // no network survives pruning: a single topic over all words
        let all: Vec<u32> = (0..corpus.vocabulary.len() as u32).collect();
        let h = HierarchyPartition::one_module(&all);
        (h, vec![all], Vec::new())
    } else {
        let flow = mapeq::compute_flow(&word_graph)?;
        let h = mapeq::optimize_partition_with(&flow, options.seed, options.max_iters);
        let leaves = mapeq::leaf_modules(&h);
        (h, leaves, word_graph.isolated_words.clone())
    };

    let state = refine::initial_topics(corpus, &leaves)?;
    let baseline = refine::assign_singletons(&state, corpus, &isolated);
    let model = refine::sweep_eta(&baseline, corpus)?;
    Ok(TrainedModel {
        embedding,
        graph: word_graph,
        hierarchy,
        model,
    })
}

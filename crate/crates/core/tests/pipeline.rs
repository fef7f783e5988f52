//! End-to-end pipeline behavior on synthetic corpora with known structure,
//! plus property tests over the corpus/graph/refinement invariants.

use hlsm_core::corpus::{
    preprocess, split_corpus, Corpus, PreprocessOptions, RawDocument,
};
use hlsm_core::eval;
use hlsm_core::graph;
use hlsm_core::lsa;
use hlsm_core::pipeline::{train, TrainOptions};
use hlsm_core::refine::{self, TopicModel};
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn block_word(block: usize, i: usize) -> String {
    format!(
        "{}{}{}",
        (b'b' + block as u8) as char,
        (b'a' + (i / 26) as u8) as char,
        (b'a' + (i % 26) as u8) as char
    )
}

/// Documents drawing `tokens` words from one of `blocks` disjoint
/// vocabularies, with a `noise` chance per token of sampling a foreign
/// block instead.
fn synthetic_corpus(
    blocks: usize,
    words_per_block: usize,
    docs: usize,
    tokens: usize,
    noise: f64,
    seed: u64,
) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = Vec::new();
    for d in 0..docs {
        let own = d % blocks;
        let mut words = Vec::new();
        for _ in 0..tokens {
            let block = if noise > 0.0 && rng.gen::<f64>() < noise {
                let mut other = rng.gen_range(0..blocks - 1);
                if other >= own {
                    other += 1;
                }
                other
            } else {
                own
            };
            words.push(block_word(block, rng.gen_range(0..words_per_block)));
        }
        raw.push(RawDocument {
            label: Some(format!("block{own}")),
            text: words.join(" "),
        });
    }
    let mut opts = PreprocessOptions::none();
    opts.min_count = 3;
    preprocess(&raw, &opts).unwrap()
}

fn block_of(corpus: &Corpus, word_id: u32) -> u8 {
    corpus.vocabulary.word(word_id).as_bytes()[0]
}

#[test]
fn three_disjoint_blocks_are_recovered_exactly() {
    let corpus = synthetic_corpus(3, 40, 200, 50, 0.0, 7);
    let trained = train(&corpus, &TrainOptions::default()).unwrap();
    assert_eq!(trained.model.topic_count, 3);
    // every topic's support is exactly one block
    for row in &trained.model.word_given_topic {
        assert_eq!(row.len(), 40);
        let first = block_of(&corpus, row[0].0);
        assert!(row.iter().all(|&(w, _)| block_of(&corpus, w) == first));
    }
    let features = eval::infer_corpus(&trained.model, &corpus);
    let accuracy = eval::nearest_centroid_accuracy(&features, 0.8, 11).unwrap();
    assert!(accuracy >= 0.99, "accuracy {accuracy}");
}

#[test]
fn noisy_blocks_still_recover_topics() {
    let corpus = synthetic_corpus(3, 40, 200, 50, 0.05, 11);
    let trained = train(&corpus, &TrainOptions::default()).unwrap();
    assert_eq!(trained.model.topic_count, 3);
    let features = eval::infer_corpus(&trained.model, &corpus);
    let accuracy = eval::nearest_centroid_accuracy(&features, 0.8, 11).unwrap();
    assert!(accuracy >= 0.95, "accuracy {accuracy}");
}

#[test]
fn trained_perplexity_tracks_the_generating_model() {
    let corpus = synthetic_corpus(2, 40, 200, 50, 0.0, 23);
    let (train_half, test_half) = split_corpus(&corpus, 0.2, 5).unwrap();
    let trained = train(&train_half, &TrainOptions::default()).unwrap();
    let hlsm = eval::perplexity(&trained.model, &test_half).unwrap();

    // the generating model: uniform over each 40-word block
    let mut word_given_topic: Vec<Vec<(u32, f64)>> = vec![Vec::new(); 2];
    for id in 0..corpus.vocabulary.len() as u32 {
        let topic = if block_of(&corpus, id) == b'b' { 0 } else { 1 };
        word_given_topic[topic].push((id, 1.0 / 40.0));
    }
    let generating = TopicModel {
        topic_count: 2,
        word_given_topic,
        topic_prior: vec![0.5, 0.5],
        eta_selected: 0.0,
        log_likelihood: 0.0,
    };
    let truth = eval::perplexity(&generating, &test_half).unwrap();
    assert!(
        hlsm.perplexity <= 1.05 * truth.perplexity,
        "hlsm {} vs generating {}",
        hlsm.perplexity,
        truth.perplexity
    );
    // lower-is-better sanity: the generating model beats a uniform one
    let uniform = TopicModel {
        topic_count: 1,
        word_given_topic: vec![(0..corpus.vocabulary.len() as u32)
            .map(|w| (w, 1.0 / corpus.vocabulary.len() as f64))
            .collect()],
        topic_prior: vec![1.0],
        eta_selected: 0.0,
        log_likelihood: 0.0,
    };
    let flat = eval::perplexity(&uniform, &test_half).unwrap();
    assert!(truth.perplexity <= flat.perplexity + 1e-9);
}

#[test]
fn extreme_threshold_still_trains() {
    let corpus = synthetic_corpus(2, 20, 60, 30, 0.0, 3);
    let options = TrainOptions {
        threshold: 0.99999999,
        ..TrainOptions::default()
    };
    let trained = train(&corpus, &options).unwrap();
    assert!(trained.model.topic_count >= 1);
    // every token still lands in a topic
    let features = eval::infer_corpus(&trained.model, &corpus);
    for f in &features {
        assert!((f.coverage - 1.0).abs() < 1e-12);
    }
}

#[test]
fn training_is_deterministic_for_fixed_seed() {
    let corpus = synthetic_corpus(2, 15, 50, 25, 0.1, 9);
    let options = TrainOptions {
        svd_rank: Some(12),
        ..TrainOptions::default()
    };
    let a = train(&corpus, &options).unwrap();
    let b = train(&corpus, &options).unwrap();
    assert_eq!(a.hierarchy, b.hierarchy);
    assert_eq!(a.model, b.model);
}

#[test]
fn count_conservation_holds_for_every_swept_eta() {
    let corpus = synthetic_corpus(3, 10, 60, 20, 0.1, 31);
    let trained = train(&corpus, &TrainOptions::default()).unwrap();
    let leaves = hlsm_core::mapeq::leaf_modules(&trained.hierarchy);
    let state = refine::initial_topics(&corpus, &leaves).unwrap();
    let baseline = refine::assign_singletons(&state, &corpus, &trained.graph.isolated_words);
    for step in 0..refine::ETA_STEPS {
        let eta = step as f64 / 100.0;
        let swept = refine::eta_reassign(&baseline, &corpus, eta).unwrap();
        assert_eq!(swept.assigned_tokens(), baseline.total_tokens());
        for doc in &corpus.documents {
            let p = swept.doc_topic(doc.doc_id);
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn standalone_clustering_from_a_graph_file() {
    // an edge-list dump is a complete input for clustering on its own
    let mut edges = Vec::new();
    for block in 0..2u32 {
        let base = block * 4;
        for i in 0..4 {
            for j in (i + 1)..4 {
                edges.push((base + i, base + j, 1.0));
            }
        }
    }
    edges.push((3, 4, 1.0));
    let original = hlsm_core::graph::WordGraph::from_edges(edges, vec![9, 10]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("words.graph");
    hlsm_core::graph::write_graph_file(&original, |id| format!("n{id}"), &path, &[]).unwrap();

    let (loaded, names) = hlsm_core::graph::read_graph_file(&path).unwrap();
    assert_eq!(loaded.edge_count(), original.edge_count());
    assert_eq!(loaded.isolated_words, vec![9, 10]);
    let flow = hlsm_core::mapeq::compute_flow(&loaded).unwrap();
    let tree = hlsm_core::mapeq::optimize_partition(&flow, 3);
    let leaves = hlsm_core::mapeq::leaf_modules(&tree);
    assert_eq!(leaves.len(), 2);
    // module membership maps back through the interned names
    let members: Vec<Vec<&str>> = leaves
        .iter()
        .map(|leaf| leaf.iter().map(|&id| names[id as usize].as_str()).collect())
        .collect();
    for group in members {
        assert_eq!(group.len(), 4);
    }
    let tree_text = hlsm_core::mapeq::write_tree(&tree, |id| names[id as usize].clone(), &[]);
    assert!(tree_text.starts_with("HLSM-TREE v1\n"));
    assert_eq!(tree_text.lines().count(), 1 + 8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Random small corpora conserve tokens between documents and
    /// vocabulary statistics, and splits partition the documents.
    #[test]
    fn corpus_invariants(
        texts in proptest::collection::vec(
            proptest::collection::vec(0usize..12, 1..30),
            2..25
        ),
        seed in 0u64..1000,
    ) {
        let words = ["alpha", "beta", "gamma", "delta", "ocean", "stone",
                     "maple", "cloud", "ember", "frost", "grove", "ridge"];
        let raw: Vec<RawDocument> = texts
            .iter()
            .map(|picks| RawDocument {
                label: None,
                text: picks.iter().map(|&i| words[i]).collect::<Vec<_>>().join(" "),
            })
            .collect();
        let corpus = preprocess(&raw, &PreprocessOptions::none()).unwrap();
        for (id, _) in corpus.vocabulary.words().iter().enumerate() {
            let total: u64 = corpus
                .documents
                .iter()
                .map(|d| d.count(id as u32) as u64)
                .sum();
            prop_assert_eq!(total, corpus.vocabulary.corpus_freq[id]);
        }
        let (train_half, test_half) = split_corpus(&corpus, 0.3, seed).unwrap();
        prop_assert_eq!(
            train_half.documents.len() + test_half.documents.len(),
            corpus.documents.len()
        );
        let mut recovered: Vec<_> = train_half
            .documents
            .iter()
            .chain(test_half.documents.iter())
            .map(|d| d.token_counts.clone())
            .collect();
        recovered.sort();
        let mut original: Vec<_> = corpus
            .documents
            .iter()
            .map(|d| d.token_counts.clone())
            .collect();
        original.sort();
        prop_assert_eq!(recovered, original);
    }

    /// Tightening the threshold only removes edges, and surviving weights
    /// always exceed it.
    #[test]
    fn graph_edges_shrink_with_threshold(
        seed in 0u64..500,
        q1 in -0.2f64..0.5,
        dq in 0.05f64..0.4,
    ) {
        let corpus = synthetic_corpus(2, 8, 30, 15, 0.2, seed);
        let matrix = lsa::build_term_doc_matrix(&corpus);
        let rank = 6.min(matrix.rows().min(matrix.cols()) - 1);
        let embedding = lsa::truncated_svd(&matrix, rank, seed).unwrap();
        let pairs = graph::cooccurring_pairs(&matrix);
        let q2 = (q1 + dq).min(0.99);
        let loose = graph::build_graph(&embedding, &pairs, q1, corpus.vocabulary.len()).unwrap();
        let tight = graph::build_graph(&embedding, &pairs, q2, corpus.vocabulary.len()).unwrap();
        let loose_set: std::collections::HashSet<(u32, u32)> =
            loose.edges.iter().map(|&(i, j, _)| (i, j)).collect();
        for &(i, j, w) in &tight.edges {
            prop_assert!(loose_set.contains(&(i, j)));
            prop_assert!(w > q2);
        }
        prop_assert!(tight.edge_count() <= loose.edge_count());
    }
}

//! The four pipeline stages behind the CLI subcommands.

use crate::config::PipelineConfig;
use hlsm_core::corpus::{
    self, load_directory_raw, load_line_raw, read_corpus_file, write_corpus_file,
    PreprocessOptions,
};
use hlsm_core::error::{Error, Result};
use hlsm_core::eval;
use hlsm_core::format;
use hlsm_core::graph;
use hlsm_core::mapeq;
use hlsm_core::pipeline::{self, TrainOptions};
use hlsm_core::refine;
use std::fs;
use std::path::Path;

/// Content hash of the input: a file hashes directly; a directory hashes
/// its sorted relative paths and file contents.
fn hash_input(path: &Path) -> Result<String> {
    if path.is_dir() {
        let mut entries: Vec<_> = walk_files(path)?;
        entries.sort();
        let mut buffer = Vec::new();
        for entry in entries {
            let rel = entry.strip_prefix(path).unwrap_or(&entry);
            buffer.extend_from_slice(rel.to_string_lossy().as_bytes());
            buffer.push(0);
            let bytes = fs::read(&entry).map_err(|source| Error::Io {
                path: entry.clone(),
                source,
            })?;
            buffer.extend_from_slice(&bytes);
        }
        Ok(format::sha256_hex(&buffer))
    } else {
        format::sha256_file(path)
    }
}

fn walk_files(root: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let read = fs::read_dir(&dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        for entry in read {
            let entry = entry.map_err(|source| Error::Io {
                path: dir.clone(),
                source,
            })?;
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path);
            }
        }
    }
    Ok(out)
}

fn provenance_comments(config: &PipelineConfig, input_hash: &str) -> Vec<String> {
    vec![
        config.provenance(),
        format!("input-sha256: {input_hash}"),
    ]
}

/// Ingests raw text (directory-per-class or one-document-per-line), applies
/// the preprocessing filters and writes an `HLSM-CORPUS v1` file.
pub fn cmd_preprocess(input: &Path, output: &Path, config: &PipelineConfig) -> Result<()> {
    let raw = if input.is_dir() {
        load_directory_raw(input)?
    } else {
        load_line_raw(input)?
    };
    let stopwords = match &config.stopword_path {
        Some(path) => corpus::load_stopwords(path)?,
        None => corpus::default_stopwords(),
    };
    let options = PreprocessOptions {
        stopwords,
        min_count: config.min_count,
        stemming: config.stemming,
        min_doc_tokens: config.min_doc_tokens,
    };
    let corpus = corpus::preprocess(&raw, &options)?;
    let comments = provenance_comments(config, &hash_input(input)?);
    write_corpus_file(&corpus, output, &comments)?;
    println!(
        "preprocess: {} documents, {} words, {} tokens -> {}",
        corpus.documents.len(),
        corpus.vocabulary.len(),
        corpus.total_tokens(),
        output.display()
    );
    Ok(())
}

/// Stratified deterministic split of a corpus file into train and test.
pub fn cmd_split(
    corpus_path: &Path,
    train_out: &Path,
    test_out: &Path,
    config: &PipelineConfig,
) -> Result<()> {
    let corpus = read_corpus_file(corpus_path)?;
    let (train, test) = corpus::split_corpus(&corpus, config.held_out_fraction, config.seed)?;
    let comments = provenance_comments(config, &hash_input(corpus_path)?);
    write_corpus_file(&train, train_out, &comments)?;
    write_corpus_file(&test, test_out, &comments)?;
    println!(
        "split: {} train / {} test -> {}, {}",
        train.documents.len(),
        test.documents.len(),
        train_out.display(),
        test_out.display()
    );
    Ok(())
}

pub struct TrainArtifacts {
    pub graph_out: std::path::PathBuf,
    pub tree_out: std::path::PathBuf,
    pub model_out: std::path::PathBuf,
    pub embed_out: Option<std::path::PathBuf>,
}

/// Full training run over a corpus file: embedding, thresholded word
/// network, hierarchical clustering, refinement; persists the graph, tree
/// and model artifacts.
pub fn cmd_train(
    corpus_path: &Path,
    artifacts: &TrainArtifacts,
    config: &PipelineConfig,
) -> Result<()> {
    let corpus = read_corpus_file(corpus_path)?;
    let input_hash = hash_input(corpus_path)?;
    let mut comments = provenance_comments(config, &input_hash);
    comments.push(format!("vocab-sha256: {}", corpus.vocabulary.content_hash()));

    // requested ranks are clamped to the matrix dimensions, not to the
    // default cap of 100
    let dimensional_cap = corpus
        .vocabulary
        .len()
        .min(corpus.documents.len())
        .saturating_sub(1)
        .max(1);
    let options = TrainOptions {
        svd_rank: Some(config.svd_rank.clamp(1, dimensional_cap)),
        threshold: config.threshold,
        seed: config.seed,
        max_iters: config.max_iters,
    };
    let trained = pipeline::train(&corpus, &options)?;

    if trained.graph.edge_count() == 0 {
        eprintln!("warning: no edge survived threshold {}; falling back to a single topic", config.threshold);
    } else if trained.graph.isolated_words.len() * 2 > corpus.vocabulary.len() {
        eprintln!(
            "warning: graph is near-empty at threshold {} ({} of {} words isolated)",
            config.threshold,
            trained.graph.isolated_words.len(),
            corpus.vocabulary.len()
        );
    }

    let vocab = &corpus.vocabulary;
    graph::write_graph_file(
        &trained.graph,
        |id| vocab.word(id).to_string(),
        &artifacts.graph_out,
        &comments,
    )?;
    mapeq::write_tree_file(
        &trained.hierarchy,
        |id| vocab.word(id).to_string(),
        &artifacts.tree_out,
        &comments,
    )?;
    refine::write_model_file(&trained.model, vocab, &artifacts.model_out, &comments)?;
    if let Some(embed_out) = &artifacts.embed_out {
        lsa_dump(&trained, vocab, embed_out, &comments)?;
    }
    println!(
        "train: topics={} eta={:.2} log_likelihood={:.4} -> {}",
        trained.model.topic_count,
        trained.model.eta_selected,
        trained.model.log_likelihood,
        artifacts.model_out.display()
    );
    Ok(())
}

fn lsa_dump(
    trained: &pipeline::TrainedModel,
    vocab: &corpus::Vocabulary,
    path: &Path,
    comments: &[String],
) -> Result<()> {
    hlsm_core::lsa::write_embedding_file(&trained.embedding, vocab, path, comments)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Perplexity,
    Features,
    Topics,
}

/// Evaluates a trained model against a corpus file. The model must have
/// been trained on the same vocabulary (checked by content hash).
pub fn cmd_eval(
    model_path: &Path,
    corpus_path: &Path,
    mode: EvalMode,
    top_n: usize,
    features_out: Option<&Path>,
) -> Result<()> {
    let corpus = read_corpus_file(corpus_path)?;
    let model_text = format::read_file(model_path)?;
    match format::comment_value(&model_text, "vocab-sha256") {
        Some(expected) if expected == corpus.vocabulary.content_hash() => {}
        Some(_) => return Err(Error::VocabularyMismatch),
        // models written without provenance still resolve words by name
        None => {}
    }
    let model = refine::read_model(&model_text, &corpus.vocabulary)?;

    match mode {
        EvalMode::Perplexity => {
            let report = eval::perplexity(&model, &corpus)?;
            println!("{report}");
        }
        EvalMode::Features => {
            let out = features_out.ok_or_else(|| Error::InvalidParameter {
                name: "features_out",
                reason: "features mode needs an output path".to_string(),
            })?;
            eval::export_features(&model, &corpus, out)?;
            println!("features: {} documents -> {}", corpus.documents.len(), out.display());
        }
        EvalMode::Topics => {
            let table = refine::topics_table(&model, top_n)?;
            for (rank, summary) in table.iter().enumerate() {
                println!("topic: {}  p(t): {:.4}", rank + 1, summary.prior);
                for &(word, p) in &summary.top_words {
                    println!("  {}  {:.6}", corpus.vocabulary.word(word), p);
                }
            }
        }
    }
    Ok(())
}

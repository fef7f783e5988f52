use clap::{Args, Parser, Subcommand, ValueEnum};
use hlsm_cli::commands::{self, EvalMode, TrainArtifacts};
use hlsm_cli::config::PipelineConfig;
use std::path::PathBuf;
use std::process::ExitCode;

/// Topic modeling over a latent-space word network: embed words by
/// truncated SVD, connect co-occurring words above a cosine threshold,
/// cluster the network hierarchically and refine the clusters into a
/// probabilistic topic model.
#[derive(Parser)]
#[command(name = "hlsm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Seed for every random choice (embedding, clustering, splits)
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize and filter raw text into a corpus file
    Preprocess {
        /// Directory-per-class root, or a one-document-per-line file
        input: PathBuf,
        /// Output corpus file (HLSM-CORPUS v1)
        output: PathBuf,
        /// Drop words occurring fewer times than this in total
        #[arg(long, default_value_t = 3)]
        min_count: u64,
        /// Stopword list file (one word per line); built-in list if unset
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Apply Porter-style stemming after stopword removal
        #[arg(long)]
        stemming: bool,
        /// Drop documents left shorter than this
        #[arg(long, default_value_t = 1)]
        min_doc_tokens: u32,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Stratified split of a corpus file into train and test corpora
    Split {
        corpus: PathBuf,
        train_out: PathBuf,
        test_out: PathBuf,
        /// Fraction of documents held out for test
        #[arg(long, default_value_t = 0.2)]
        held_out: f64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Train a topic model from a corpus file
    Train {
        corpus: PathBuf,
        /// Output model file (HLSM-MODEL v1)
        model_out: PathBuf,
        /// Output word-network file (HLSM-GRAPH v1)
        #[arg(long)]
        graph_out: Option<PathBuf>,
        /// Output hierarchy file (HLSM-TREE v1)
        #[arg(long)]
        tree_out: Option<PathBuf>,
        /// Optional embedding dump (HLSM-EMBED v1)
        #[arg(long)]
        embed_out: Option<PathBuf>,
        /// Embedding rank (clamped to the matrix dimensions)
        #[arg(long, default_value_t = 100)]
        svd_rank: usize,
        /// Association threshold q; edges require similarity above it
        #[arg(long, default_value_t = 0.25)]
        threshold: f64,
        /// Cap on the clustering search's outer iterations
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Evaluate a trained model against a corpus file
    Eval {
        model: PathBuf,
        corpus: PathBuf,
        /// What to report
        #[arg(long, value_enum, default_value_t = Mode::Perplexity)]
        mode: Mode,
        /// Words shown per topic in topics mode
        #[arg(long, default_value_t = 6)]
        top_n: usize,
        /// Output CSV path for features mode
        #[arg(long)]
        features_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Perplexity,
    Features,
    Topics,
}

fn thread_pool_from_env() {
    let Some(value) = std::env::var_os("HLSM_THREADS") else {
        return;
    };
    let Ok(requested) = value.into_string().map(|s| s.parse::<usize>()) else {
        return;
    };
    match requested {
        Ok(n) if n > 0 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => {} // 0 or unparsable: automatic sizing
    }
}

fn main() -> ExitCode {
    thread_pool_from_env();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Preprocess {
            input,
            output,
            min_count,
            stopwords,
            stemming,
            min_doc_tokens,
            common,
        } => {
            let config = PipelineConfig {
                min_count,
                stopword_path: stopwords,
                stemming,
                min_doc_tokens,
                seed: common.seed,
                ..PipelineConfig::default()
            };
            commands::cmd_preprocess(&input, &output, &config)
        }
        Command::Split {
            corpus,
            train_out,
            test_out,
            held_out,
            common,
        } => {
            let config = PipelineConfig {
                held_out_fraction: held_out,
                seed: common.seed,
                ..PipelineConfig::default()
            };
            commands::cmd_split(&corpus, &train_out, &test_out, &config)
        }
        Command::Train {
            corpus,
            model_out,
            graph_out,
            tree_out,
            embed_out,
            svd_rank,
            threshold,
            max_iters,
            common,
        } => {
            let config = PipelineConfig {
                svd_rank,
                threshold,
                max_iters,
                seed: common.seed,
                ..PipelineConfig::default()
            };
            let artifacts = TrainArtifacts {
                graph_out: graph_out.unwrap_or_else(|| model_out.with_extension("graph")),
                tree_out: tree_out.unwrap_or_else(|| model_out.with_extension("tree")),
                model_out,
                embed_out,
            };
            commands::cmd_train(&corpus, &artifacts, &config)
        }
        Command::Eval {
            model,
            corpus,
            mode,
            top_n,
            features_out,
        } => {
            let mode = match mode {
                Mode::Perplexity => EvalMode::Perplexity,
                Mode::Features => EvalMode::Features,
                Mode::Topics => EvalMode::Topics,
            };
            commands::cmd_eval(&model, &corpus, mode, top_n, features_out.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

//! The single configuration surface shared by all subcommands. The eta
//! sweep grid is fixed by the refinement procedure and recorded here only
//! for provenance.

use std::path::PathBuf;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Words with fewer total occurrences are dropped.
    pub min_count: u64,
    /// Stopword list file; the built-in 163-entry list when unset.
    pub stopword_path: Option<PathBuf>,
    /// Porter-style stemming of tokens.
    pub stemming: bool,
    /// Documents shorter than this after filtering are dropped.
    pub min_doc_tokens: u32,
    /// Requested embedding rank; clamped to min(N_w, N) − 1 at train time.
    pub svd_rank: usize,
    /// Association threshold q.
    pub threshold: f64,
    pub seed: u64,
    pub held_out_fraction: f64,
    /// Cap on the clustering search's outer iterations.
    pub max_iters: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            min_count: 3,
            stopword_path: None,
            stemming: false,
            min_doc_tokens: 1,
            svd_rank: 100,
            threshold: 0.25,
            seed: 0,
            held_out_fraction: 0.2,
            max_iters: 100,
        }
    }
}

impl PipelineConfig {
    /// One-line key=value rendering embedded verbatim in artifact headers.
    pub fn provenance(&self) -> String {
        let stopwords = self
            .stopword_path
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "builtin".to_string());
        format!(
            "config: min_count={} stopwords={} stemming={} min_doc_tokens={} \
             svd_rank={} threshold={} eta_step=0.01 eta_range=0.00-0.50 seed={} held_out={} max_iters={}",
            self.min_count,
            stopwords,
            if self.stemming { "on" } else { "off" },
            self.min_doc_tokens,
            self.svd_rank,
            self.threshold,
            self.seed,
            self.held_out_fraction,
            self.max_iters,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_line_carries_every_field() {
        let config = PipelineConfig::default();
        let line = config.provenance();
        for key in [
            "min_count=3",
            "stopwords=builtin",
            "stemming=off",
            "svd_rank=100",
            "threshold=0.25",
            "eta_step=0.01",
            "eta_range=0.00-0.50",
            "seed=0",
            "held_out=0.2",
            "max_iters=100",
        ] {
            assert!(line.contains(key), "missing {key} in {line}");
        }
    }
}

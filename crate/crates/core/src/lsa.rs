//! Term-document matrix construction and the truncated-SVD word embedding.
//!
//! Words are embedded as the rows of U·Σ̃ where U, Σ̃ come from the top
//! singular triplets of the sparse word-by-document count matrix. The
//! decomposition uses a seeded randomized range finder with power
//! iterations, run until the retained singular values stop changing.

use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::format;
use nalgebra::{DMatrix, SVD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt::Write as _;
use std::path::Path;

pub const EMBED_HEADER: &str = "HLSM-EMBED v1";

const OVERSAMPLE: usize = 10;
const MAX_POWER_ITERS: usize = 300;
const MIN_POWER_ITERS: usize = 4;
/// Relative change (against the largest value) at which the retained
/// singular-value estimates count as converged. With the oversampled
/// subspace the per-iteration contraction ratio stays well below 0.999,
/// so a 1e-9 change bounds the value error comfortably inside the 1e-6
/// accuracy band; a tighter bar would sit below large-matrix roundoff
/// chatter and never be reached.
const CONVERGENCE_TOL: f64 = 1e-9;

/// Sparse word-by-document occurrence counts, stored in CSR (by word) with
/// a CSC companion index (by document) for co-occurrence scans.
#[derive(Debug, Clone)]
pub struct TermDocMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
}

impl TermDocMatrix {
    /// Word count N_w.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Document count N.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Occurrence count of word `i` in document `j`.
    pub fn get(&self, i: u32, j: u32) -> f64 {
        let range = self.row_ptr[i as usize]..self.row_ptr[i as usize + 1];
        for k in range {
            if self.col_idx[k] == j {
                return self.values[k];
            }
        }
        0.0
    }

    /// The distinct word ids occurring in document `j`.
    pub fn doc_word_ids(&self, j: u32) -> &[u32] {
        &self.row_idx[self.col_ptr[j as usize]..self.col_ptr[j as usize + 1]]
    }

    /// A · X for dense X with `cols` rows.
    fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, x.ncols());
        for c in 0..x.ncols() {
            let xc = x.column(c);
            let mut oc = out.column_mut(c);
            for i in 0..self.rows {
                let mut acc = 0.0;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.values[k] * xc[self.col_idx[k] as usize];
                }
                oc[i] = acc;
            }
        }
        out
    }

    /// Aᵀ · Y for dense Y with `rows` rows.
    fn mul_transpose_dense(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.cols, y.ncols());
        for c in 0..y.ncols() {
            let yc = y.column(c);
            let mut oc = out.column_mut(c);
            for i in 0..self.rows {
                let yi = yc[i];
                if yi != 0.0 {
                    for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                        oc[self.col_idx[k] as usize] += self.values[k] * yi;
                    }
                }
            }
        }
        out
    }

    /// Dense copy; intended for small matrices in tests and oracles.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[(i, self.col_idx[k] as usize)] = self.values[k];
            }
        }
        out
    }

    /// Builds a matrix from (word, doc, count) triples; duplicate positions
    /// are rejected upstream by construction.
    pub fn from_triples(rows: usize, cols: usize, mut triples: Vec<(u32, u32, f64)>) -> Self {
        triples.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_ptr = vec![0usize; cols + 1];
        for &(i, j, _) in &triples {
            row_ptr[i as usize + 1] += 1;
            col_ptr[j as usize + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let col_idx = triples.iter().map(|&(_, j, _)| j).collect();
        let values = triples.iter().map(|&(_, _, v)| v).collect();
        let mut row_idx = vec![0u32; triples.len()];
        let mut fill = col_ptr.clone();
        for &(i, j, _) in &triples {
            row_idx[fill[j as usize]] = i;
            fill[j as usize] += 1;
        }
        TermDocMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
            col_ptr,
            row_idx,
        }
    }
}

/// Entry (i, j) is present iff word i occurs in document j, with the raw
/// occurrence count as value.
pub fn build_term_doc_matrix(corpus: &Corpus) -> TermDocMatrix {
    let mut triples = Vec::new();
    for doc in &corpus.documents {
        for (&word_id, &count) in &doc.token_counts {
            triples.push((word_id, doc.doc_id, count as f64));
        }
    }
    TermDocMatrix::from_triples(corpus.vocabulary.len(), corpus.documents.len(), triples)
}

/// Rank-reduced word embedding: row i of `vectors` is word i's coordinates
/// in the latent space, already scaled by the retained singular values.
#[derive(Debug, Clone)]
pub struct WordEmbedding {
    rank: usize,
    n_words: usize,
    vectors: Vec<f64>,
    singular_values: Vec<f64>,
}

impl WordEmbedding {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n_words(&self) -> usize {
        self.n_words
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Assembles an embedding from precomputed rows; rows are W = U·Σ̃.
    pub fn from_raw_parts(
        n_words: usize,
        rank: usize,
        vectors: Vec<f64>,
        singular_values: Vec<f64>,
    ) -> Self {
        assert_eq!(vectors.len(), n_words * rank);
        WordEmbedding {
            rank,
            n_words,
            vectors,
            singular_values,
        }
    }

    /// Row `word_id` of the embedding.
    pub fn word_vector(&self, word_id: u32) -> Result<&[f64]> {
        let idx = word_id as usize;
        if idx >= self.n_words {
            return Err(Error::InvalidParameter {
                name: "word_id",
                reason: format!("{word_id} out of range for {} words", self.n_words),
            });
        }
        Ok(&self.vectors[idx * self.rank..(idx + 1) * self.rank])
    }
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

fn sorted_singular_values(r: &DMatrix<f64>) -> Vec<f64> {
    let mut vals: Vec<f64> = SVD::new(r.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    vals
}

/// Top-`rank` singular triplets of the count matrix via randomized subspace
/// iteration (oversampling 10). Power steps repeat until the retained
/// singular values change by less than a relative 1e-9 between iterations,
/// which pins them well inside the documented 1e-6 accuracy band.
pub fn truncated_svd(m: &TermDocMatrix, rank: usize, seed: u64) -> Result<WordEmbedding> {
    let min_dim = m.rows().min(m.cols());
    if rank < 1 || rank > min_dim {
        return Err(Error::RankOutOfRange {
            rank,
            max: min_dim,
        });
    }
    let sample = (rank + OVERSAMPLE).min(min_dim);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(m.cols(), sample, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormalize(m.mul_dense(&omega));

    let mut prev: Option<Vec<f64>> = None;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for iter in 0..MAX_POWER_ITERS {
        let at_q = m.mul_transpose_dense(&q);
        let qr = at_q.qr();
        let estimates = sorted_singular_values(&qr.r());
        let z = qr.q();
        if let Some(prev) = &prev {
            let scale = estimates[0].max(f64::MIN_POSITIVE);
            residual = (0..rank)
                .map(|i| (estimates[i] - prev[i]).abs() / scale)
                .fold(0.0, f64::max);
            if std::env::var_os("HLSM_SVD_TRACE").is_some() {
                eprintln!("[svd] iter {iter}: change {residual:.3e}");
            }
            if residual < CONVERGENCE_TOL && iter >= MIN_POWER_ITERS {
                converged = true;
            }
        }
        prev = Some(estimates);
        q = orthonormalize(m.mul_dense(&z));
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence {
            iterations: MAX_POWER_ITERS,
            residual,
        });
    }

    // Project: B = QᵀA is sample×cols; its SVD gives the triplets of A
    // restricted to the captured subspace.
    let b = m.mul_transpose_dense(&q).transpose();
    let svd = SVD::new(b, true, false);
    let u_small = svd.u.expect("u requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });

    let u_full = q * u_small;
    let mut vectors = vec![0.0; m.rows() * rank];
    let mut singular_values = Vec::with_capacity(rank);
    for (col_out, &col_in) in order.iter().take(rank).enumerate() {
        let sigma = svd.singular_values[col_in];
        singular_values.push(sigma);
        let column = u_full.column(col_in);
        // fix an overall sign per column so dumps are stable
        let mut flip = 1.0;
        let mut best = 0.0;
        for &x in column.iter() {
            if x.abs() > best {
                best = x.abs();
                flip = if x < 0.0 { -1.0 } else { 1.0 };
            }
        }
        for (row, &x) in column.iter().enumerate() {
            vectors[row * rank + col_out] = flip * x * sigma;
        }
    }

    Ok(WordEmbedding {
        rank,
        n_words: m.rows(),
        vectors,
        singular_values,
    })
}

/// Writes the optional `HLSM-EMBED v1` dump.
pub fn write_embedding(
    embedding: &WordEmbedding,
    vocabulary: &Vocabulary,
    comments: &[String],
) -> String {
    let mut out = String::new();
    out.push_str(EMBED_HEADER);
    out.push('\n');
    for comment in comments {
        let _ = writeln!(out, "# {comment}");
    }
    for id in 0..embedding.n_words {
        let row = &embedding.vectors[id * embedding.rank..(id + 1) * embedding.rank];
        let coords: Vec<String> = row.iter().map(|&v| format::sig9(v)).collect();
        let _ = writeln!(out, "{}\t{}", vocabulary.word(id as u32), coords.join(","));
    }
    out
}

pub fn write_embedding_file(
    embedding: &WordEmbedding,
    vocabulary: &Vocabulary,
    path: &Path,
    comments: &[String],
) -> Result<()> {
    format::write_file(path, &write_embedding(embedding, vocabulary, comments))
}

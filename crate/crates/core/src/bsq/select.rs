use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gaussian::{fit_diag_gaussian_rows, DiagGaussian};
use super::likelihood::{bsq_log_ratio_with, bsq_terms, Aggregation};
use crate::error::{ensure, Result};
use crate::pool::Matrix;

/// How a batch is assembled from the scores.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BsqMode {
    /// Score every candidate once against the current annotated fit and take
    /// the top `n_rep`.
    #[default]
    OneShot,
    /// Pick one at a time, refitting the annotated Gaussian with each pick
    /// before rescoring.
    SequentialRefit,
}

/// Score of one candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsqScore {
    pub index: usize,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_dim_terms: Option<Vec<f64>>,
}

/// Scores each candidate row of `embeddings`, in candidate order.
pub fn score_candidates(
    candidates: &[usize],
    embeddings: &Matrix,
    g_pool: &DiagGaussian,
    g_an: &DiagGaussian,
    aggregation: Aggregation,
) -> Result<Vec<BsqScore>> {
    candidates
        .par_iter()
        .map(|&i| {
            Ok(BsqScore {
                index: i,
                score: bsq_log_ratio_with(embeddings.row(i), g_pool, g_an, aggregation)?,
                per_dim_terms: None,
            })
        })
        .collect()
}

/// Like [`score_candidates`] with the per-dimension terms attached.
pub fn score_candidates_detailed(
    candidates: &[usize],
    embeddings: &Matrix,
    g_pool: &DiagGaussian,
    g_an: &DiagGaussian,
) -> Result<Vec<BsqScore>> {
    candidates
        .par_iter()
        .map(|&i| {
            let terms = bsq_terms(embeddings.row(i), g_pool, g_an)?;
            Ok(BsqScore {
                index: i,
                score: terms.iter().sum(),
                per_dim_terms: Some(terms),
            })
        })
        .collect()
}

/// Descending by score, ties by ascending index.
fn rank(scores: &mut [BsqScore]) {
    scores.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
}

/// One-shot selection: the `n_rep` candidates (pool indices from `s_unc`)
/// with the largest log ratio, best first.
pub fn select_bsq(
    s_unc: &[usize],
    embeddings: &Matrix,
    g_pool: &DiagGaussian,
    g_an: &DiagGaussian,
    n_rep: usize,
) -> Result<Vec<usize>> {
    select_bsq_with(s_unc, embeddings, g_pool, g_an, n_rep, Aggregation::PerDimension)
}

pub fn select_bsq_with(
    s_unc: &[usize],
    embeddings: &Matrix,
    g_pool: &DiagGaussian,
    g_an: &DiagGaussian,
    n_rep: usize,
    aggregation: Aggregation,
) -> Result<Vec<usize>> {
    ensure!(!s_unc.is_empty(), Config, "no candidates to select from");
    ensure!(n_rep >= 1, Config, "n_rep must be at least 1");
    let mut scores = score_candidates(s_unc, embeddings, g_pool, g_an, aggregation)?;
    rank(&mut scores);
    Ok(scores.into_iter().take(n_rep).map(|s| s.index).collect())
}

/// Sequential selection: after each pick the annotated Gaussian is refitted
/// on `annotated` plus everything picked so far.
pub fn select_bsq_sequential(
    s_unc: &[usize],
    embeddings: &Matrix,
    g_pool: &DiagGaussian,
    annotated: &[usize],
    n_rep: usize,
    aggregation: Aggregation,
) -> Result<Vec<usize>> {
    ensure!(!s_unc.is_empty(), Config, "no candidates to select from");
    ensure!(n_rep >= 1, Config, "n_rep must be at least 1");
    let mut fitted_on = annotated.to_vec();
    let mut remaining = s_unc.to_vec();
    let mut picked = Vec::new();
    while picked.len() < n_rep && !remaining.is_empty() {
        let g_an = fit_diag_gaussian_rows(embeddings, &fitted_on)?;
        let mut scores = score_candidates(&remaining, embeddings, g_pool, &g_an, aggregation)?;
        rank(&mut scores);
        let best = scores[0].index;
        picked.push(best);
        fitted_on.push(best);
        remaining.retain(|&i| i != best);
    }
    Ok(picked)
}

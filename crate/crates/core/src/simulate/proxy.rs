use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::pool::Matrix;
use crate::scoring::PredictionStack;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProxyConfig {
    pub k: usize,
    pub n_models: usize,
}

impl Default for ProxyConfig {
    fn default() -> Self {
        Self { k: 3, n_models: 17 }
    }
}

/// Bagged k-nearest-neighbour classifier over latent embeddings.
///
/// Each of the `n_models` members sees a bootstrap resample of the
/// reference set; the spread of their one-hot votes plays the role of a
/// Monte-Carlo prediction stack.
#[derive(Clone, Debug)]
pub struct ProxyLearner {
    reference: Matrix,
    labels: Vec<u32>,
    n_labels: usize,
    k: usize,
    resamples: Vec<Vec<usize>>,
    seed: u64,
}

/// Fits `n_models` bootstrap resamples of the labelled reference set.
pub fn proxy_fit(reference: &Matrix, labels: &[u32], n_labels: usize, config: ProxyConfig, seed: u64) -> Result<ProxyLearner> {
    let m = reference.rows();
    ensure!(m >= 1, Config, "proxy learner needs a non-empty reference set");
    ensure!(labels.len() == m, Shape, "{} labels for {m} reference rows", labels.len());
    ensure!(config.k >= 1, Config, "k must be at least 1");
    ensure!(config.k <= m, Config, "k={} exceeds reference size {m}", config.k);
    ensure!(config.n_models >= 1, Config, "need at least one bootstrap model");
    ensure!(
        labels.iter().all(|&l| (l as usize) < n_labels),
        Config,
        "reference label outside 0..{n_labels}"
    );
    let mut rng = seed::rng_from(seed::derive_seed(seed, "proxy-bootstrap"));
    let resamples = (0..config.n_models)
        .map(|_| (0..m).map(|_| rng.random_range(0..m)).collect())
        .collect();
    Ok(ProxyLearner {
        reference: reference.clone(),
        labels: labels.to_vec(),
        n_labels,
        k: config.k,
        resamples,
        seed,
    })
}

impl ProxyLearner {
    pub fn n_models(&self) -> usize {
        self.resamples.len()
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Vote of one bootstrap member. Neighbours are ranked by distance, then
    /// by draw position within the resample; the majority label wins, ties
    /// going to the lowest label.
    fn vote(&self, distances: &[f64], resample: &[usize], order: &mut Vec<usize>, counts: &mut [usize]) -> usize {
        order.clear();
        order.extend(0..resample.len());
        let key = |p: usize| distances[resample[p]];
        order.select_nth_unstable_by(self.k - 1, |&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
        counts.iter_mut().for_each(|c| *c = 0);
        for &p in &order[..self.k] {
            counts[self.labels[resample[p]] as usize] += 1;
        }
        (0..counts.len()).fold(0, |best, l| if counts[l] > counts[best] { l } else { best })
    }

    /// Stacked one-hot votes for each query row: one stack per query with
    /// `n_mc = n_models`, a single pixel and `n_labels` channels.
    pub fn predict(&self, queries: &Matrix, ids: &[u64]) -> Result<Vec<PredictionStack>> {
        ensure!(
            queries.cols() == self.reference.cols(),
            Shape,
            "queries have {} dims, reference has {}",
            queries.cols(),
            self.reference.cols()
        );
        ensure!(ids.len() == queries.rows(), Shape, "{} ids for {} queries", ids.len(), queries.rows());
        (0..queries.rows())
            .into_par_iter()
            .map(|q| {
                let z = queries.row(q);
                let distances: Vec<f64> = self
                    .reference
                    .iter_rows()
                    .map(|r| r.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum())
                    .collect();
                let mut order = Vec::with_capacity(self.reference.rows());
                let mut counts = vec![0; self.n_labels];
                let mut values = vec![0.0; self.resamples.len() * self.n_labels];
                for (m, resample) in self.resamples.iter().enumerate() {
                    let l = self.vote(&distances, resample, &mut order, &mut counts);
                    values[m * self.n_labels + l] = 1.0;
                }
                PredictionStack::new(ids[q], self.resamples.len(), 1, self.n_labels, values)
            })
            .collect()
    }

    /// Consensus label per query: argmax of the mean vote, lowest label on
    /// ties.
    pub fn predict_labels(&self, queries: &Matrix) -> Result<Vec<u32>> {
        let ids: Vec<u64> = (0..queries.rows() as u64).collect();
        Ok(self
            .predict(queries, &ids)?
            .iter()
            .map(|s| {
                let mean = s.mean_prediction(0);
                (0..mean.len()).fold(0, |best, l| if mean[l] > mean[best] { l } else { best }) as u32
            })
            .collect())
    }
}

/// Convenience wrapper matching [`ProxyLearner::predict`].
pub fn proxy_predict(learner: &ProxyLearner, queries: &Matrix, ids: &[u64]) -> Result<Vec<PredictionStack>> {
    learner.predict(queries, ids)
}

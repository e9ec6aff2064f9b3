//! Synthetic desk-scale datasets: labelled Gaussian blobs in a latent space.

use rand::seq::{index, SliceRandom};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::pool::{create_pool, Matrix, SamplePool};
use crate::seed;

/// Parameters of [`synth_clusters`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_classes: usize,
    pub per_class: usize,
    pub dims: usize,
    /// Class priors used for initial-annotation draws. Empty means uniform.
    pub class_priors: Vec<f64>,
    pub seed: u64,
    /// Standard deviation of the class-center distribution.
    pub center_spread: f64,
    /// Within-class standard deviation.
    pub cluster_std: f64,
}

impl SynthConfig {
    pub fn new(n_classes: usize, per_class: usize, dims: usize, seed: u64) -> Self {
        Self {
            n_classes,
            per_class,
            dims,
            class_priors: Vec::new(),
            seed,
            center_spread: 2.0,
            cluster_std: 1.0,
        }
    }

    /// Priors with the empty-means-uniform convention resolved.
    pub fn resolved_priors(&self) -> Vec<f64> {
        if self.class_priors.is_empty() {
            vec![1.0; self.n_classes]
        } else {
            self.class_priors.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_classes >= 1, Config, "need at least one class");
        ensure!(self.per_class >= 1, Config, "need at least one sample per class");
        ensure!(self.dims >= 1, Config, "need at least one dimension");
        ensure!(
            self.center_spread >= 0.0 && self.center_spread.is_finite(),
            Config,
            "center spread must be finite and non-negative"
        );
        ensure!(
            self.cluster_std > 0.0 && self.cluster_std.is_finite(),
            Config,
            "cluster std must be positive"
        );
        let priors = self.resolved_priors();
        ensure!(
            priors.len() == self.n_classes,
            Config,
            "{} priors for {} classes",
            priors.len(),
            self.n_classes
        );
        ensure!(
            priors.iter().all(|p| *p >= 0.0 && p.is_finite()),
            Config,
            "priors must be non-negative"
        );
        ensure!(priors.iter().sum::<f64>() > 0.0, Config, "class priors sum to zero");
        Ok(())
    }
}

/// Deterministic class centers for a configuration.
pub fn class_centers(cfg: &SynthConfig) -> Matrix {
    let mut rng = seed::rng_from(seed::derive_seed(cfg.seed, "synth-centers"));
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let data = (0..cfg.n_classes * cfg.dims)
        .map(|_| cfg.center_spread * normal.sample(&mut rng))
        .collect();
    Matrix::from_vec(cfg.n_classes, cfg.dims, data).expect("sized above")
}

/// Generates `n_classes * per_class` labelled samples in shuffled order.
pub fn synth_clusters(cfg: &SynthConfig) -> Result<SamplePool> {
    cfg.validate()?;
    let centers = class_centers(cfg);
    let mut rng = seed::rng_from(seed::derive_seed(cfg.seed, "synth-samples"));
    let noise = Normal::new(0.0, cfg.cluster_std).expect("validated std");

    let mut labels: Vec<u32> = (0..cfg.n_classes)
        .flat_map(|c| std::iter::repeat_n(c as u32, cfg.per_class))
        .collect();
    labels.shuffle(&mut rng);

    let mut data = Vec::with_capacity(labels.len() * cfg.dims);
    for &c in &labels {
        for &mu in centers.row(c as usize) {
            data.push(mu + noise.sample(&mut rng));
        }
    }
    let embeddings = Matrix::from_vec(labels.len(), cfg.dims, data)?;
    create_pool(embeddings, Some(labels), None)
}

/// Uniform priors with `n_reduced` randomly chosen classes divided by
/// `factor`.
pub fn imbalanced_priors(n_classes: usize, n_reduced: usize, factor: f64, seed: u64) -> Result<Vec<f64>> {
    ensure!(
        n_reduced <= n_classes,
        Config,
        "cannot reduce {n_reduced} of {n_classes} classes"
    );
    ensure!(factor > 0.0 && factor.is_finite(), Config, "reduction factor must be positive");
    let mut rng = seed::rng_from(seed::derive_seed(seed, "reduced-classes"));
    let mut priors = vec![1.0; n_classes];
    for c in index::sample(&mut rng, n_classes, n_reduced) {
        priors[c] /= factor;
    }
    Ok(priors)
}

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::pool::Matrix;

/// Floor applied to fitted standard deviations.
pub const STD_FLOOR: f64 = 1e-6;

/// Axis-aligned Gaussian fitted to a set of embeddings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagGaussian {
    mean: Vec<f64>,
    std: Vec<f64>,
    n_fit: usize,
    degenerate: bool,
}

impl DiagGaussian {
    /// Builds a Gaussian from explicit parameters. Every std must be
    /// positive.
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        ensure!(!mean.is_empty(), Shape, "Gaussian needs at least one dimension");
        ensure!(
            mean.len() == std.len(),
            Shape,
            "mean has {} dims, std has {}",
            mean.len(),
            std.len()
        );
        ensure!(
            std.iter().all(|s| *s > 0.0 && s.is_finite()) && mean.iter().all(|m| m.is_finite()),
            Numeric,
            "Gaussian parameters must be finite with positive std"
        );
        Ok(Self {
            mean,
            std,
            n_fit: 0,
            degenerate: false,
        })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn n_fit(&self) -> usize {
        self.n_fit
    }

    /// True when at least one fitted std fell below [`STD_FLOOR`] and was
    /// clamped.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Collapses the dimensions into one univariate Gaussian with
    /// [`gaussian_product`].
    pub fn joint_1d(&self) -> (f64, f64) {
        let parts: Vec<(f64, f64)> = self.mean.iter().copied().zip(self.std.iter().copied()).collect();
        gaussian_product(&parts).expect("at least one dimension with positive std")
    }
}

/// Fits per-dimension mean and population std (divisor `m`) to all rows.
pub fn fit_diag_gaussian(embeddings: &Matrix) -> Result<DiagGaussian> {
    let all: Vec<usize> = (0..embeddings.rows()).collect();
    fit_diag_gaussian_rows(embeddings, &all)
}

/// Fits to the selected rows only, summing in the order given.
pub fn fit_diag_gaussian_rows(embeddings: &Matrix, rows: &[usize]) -> Result<DiagGaussian> {
    let m = rows.len();
    if m < 2 {
        return Err(Error::InsufficientData { needed: 2, got: m });
    }
    let d = embeddings.cols();
    let mut mean = vec![0.0; d];
    for &i in rows {
        for (acc, v) in mean.iter_mut().zip(embeddings.row(i)) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);
    let mut var = vec![0.0; d];
    for &i in rows {
        for ((acc, v), mu) in var.iter_mut().zip(embeddings.row(i)).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let mut degenerate = false;
    let std = var
        .into_iter()
        .map(|v| {
            let s = (v / m as f64).sqrt();
            if s < STD_FLOOR {
                degenerate = true;
                STD_FLOOR
            } else {
                s
            }
        })
        .collect();
    Ok(DiagGaussian {
        mean,
        std,
        n_fit: m,
        degenerate,
    })
}

/// Product of univariate Gaussians given as `(mean, std)` pairs: precisions
/// add and the mean is precision-weighted. Returns `(mean, std)`.
pub fn gaussian_product(components: &[(f64, f64)]) -> Result<(f64, f64)> {
    ensure!(!components.is_empty(), Config, "product of zero Gaussians");
    ensure!(
        components.iter().all(|(_, s)| *s > 0.0 && s.is_finite()),
        Numeric,
        "all component stds must be positive"
    );
    let precision: f64 = components.iter().map(|(_, s)| 1.0 / (s * s)).sum();
    let weighted: f64 = components.iter().map(|(m, s)| m / (s * s)).sum();
    let var = 1.0 / precision;
    Ok((var * weighted, var.sqrt()))
}

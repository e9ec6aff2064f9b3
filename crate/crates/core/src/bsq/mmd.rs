use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::pool::Matrix;

/// Kernel used by [`mmd`]. The default squares the distance; the
/// unsquared variant follows the literal `exp(-||z - z'|| / (2 sigma^2))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    Gaussian { sigma: f64 },
    Unsquared { sigma: f64 },
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Gaussian { sigma: 1.0 }
    }
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        match *self {
            Kernel::Gaussian { sigma } => (-sq / (2.0 * sigma * sigma)).exp(),
            Kernel::Unsquared { sigma } => (-sq.sqrt() / (2.0 * sigma * sigma)).exp(),
        }
    }

    fn validate(&self) -> Result<()> {
        let (Kernel::Gaussian { sigma } | Kernel::Unsquared { sigma }) = *self;
        ensure!(sigma > 0.0 && sigma.is_finite(), Config, "kernel bandwidth must be positive");
        Ok(())
    }
}

/// Mean kernel value over all pairs, diagonal included. Row sums are
/// computed in parallel and reduced in row order.
fn mean_kernel(x: &Matrix, y: &Matrix, kernel: Kernel) -> f64 {
    let row_sums: Vec<f64> = (0..x.rows())
        .into_par_iter()
        .map(|i| {
            let a = x.row(i);
            y.iter_rows().map(|b| kernel.eval(a, b)).sum::<f64>()
        })
        .collect();
    row_sums.iter().sum::<f64>() / (x.rows() as f64 * y.rows() as f64)
}

fn check(x: &Matrix, y: &Matrix, kernel: Kernel) -> Result<()> {
    kernel.validate()?;
    ensure!(x.rows() > 0 && y.rows() > 0, Config, "MMD needs two non-empty sets");
    ensure!(
        x.cols() == y.cols(),
        Shape,
        "MMD sets differ in dimension: {} vs {}",
        x.cols(),
        y.cols()
    );
    Ok(())
}

/// Biased (V-statistic) squared maximum mean discrepancy between two sets.
/// Rounding below zero is clamped, so the result is always `>= 0`.
pub fn mmd(x: &Matrix, y: &Matrix, kernel: Kernel) -> Result<f64> {
    check(x, y, kernel)?;
    let v = mean_kernel(x, x, kernel) + mean_kernel(y, y, kernel) - 2.0 * mean_kernel(x, y, kernel);
    Ok(v.max(0.0))
}

/// A fixed reference set with its self-similarity term precomputed, for
/// repeated comparisons against a growing set.
#[derive(Clone, Debug)]
pub struct MmdReference {
    reference: Matrix,
    kernel: Kernel,
    self_term: f64,
}

impl MmdReference {
    pub fn new(reference: Matrix, kernel: Kernel) -> Result<Self> {
        check(&reference, &reference, kernel)?;
        let self_term = mean_kernel(&reference, &reference, kernel);
        Ok(Self {
            reference,
            kernel,
            self_term,
        })
    }

    pub fn mmd_to(&self, x: &Matrix) -> Result<f64> {
        check(x, &self.reference, self.kernel)?;
        let v = mean_kernel(x, x, self.kernel) + self.self_term
            - 2.0 * mean_kernel(x, &self.reference, self.kernel);
        Ok(v.max(0.0))
    }
}

use serde::{Deserialize, Serialize};

use super::gaussian::{gaussian_product, DiagGaussian};
use crate::error::{ensure, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Above this argument `erfc` underflows towards subnormals, so the log is
/// taken from the asymptotic expansion instead.
const ASYMPTOTIC_FROM: f64 = 25.0;

/// `ln(erfc(x))` for `x >= 0`, finite for every finite `x`.
pub fn ln_erfc(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < ASYMPTOTIC_FROM {
        return libm::erfc(x).ln();
    }
    // erfc(x) ~ exp(-x^2) / (x sqrt(pi)) * (1 - 1/(2x^2) + 3/(4x^4) - 15/(8x^6) + 105/(16x^8))
    let inv2 = 1.0 / (x * x);
    let series = 1.0 + inv2 * (-0.5 + inv2 * (0.75 + inv2 * (-1.875 + inv2 * 6.5625)));
    -x * x - x.ln() - 0.5 * std::f64::consts::PI.ln() + series.ln()
}

fn standardized(z: f64, mean: f64, std: f64) -> Result<f64> {
    ensure!(std > 0.0 && std.is_finite(), Numeric, "std must be positive, got {std}");
    Ok((z - mean).abs() / (std * SQRT_2))
}

/// Two-sided tail likelihood `1 + erf(-|z - mean| / (std sqrt 2))`, i.e.
/// twice the Gaussian mass beyond `z`. Equals 1 at the mean.
pub fn erf_tail_likelihood(z: f64, mean: f64, std: f64) -> Result<f64> {
    Ok(libm::erfc(standardized(z, mean, std)?))
}

/// Natural log of [`erf_tail_likelihood`], accurate far into the tails.
pub fn ln_erf_tail_likelihood(z: f64, mean: f64, std: f64) -> Result<f64> {
    Ok(ln_erfc(standardized(z, mean, std)?))
}

/// How per-dimension likelihoods are combined into one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Product of per-dimension likelihoods (sum of logs).
    #[default]
    PerDimension,
    /// Collapse the fitted Gaussian into its product-of-univariates summary
    /// and evaluate one likelihood at the precision-weighted mean of `z`.
    ProductGaussian,
}

fn check_dims(z: &[f64], g: &DiagGaussian) -> Result<()> {
    ensure!(
        z.len() == g.dims(),
        Shape,
        "embedding has {} dims, Gaussian has {}",
        z.len(),
        g.dims()
    );
    Ok(())
}

/// Per-dimension log-likelihood ratio terms
/// `ln q(z_d | pool_d) - ln q(z_d | an_d)`.
pub fn bsq_terms(z: &[f64], g_pool: &DiagGaussian, g_an: &DiagGaussian) -> Result<Vec<f64>> {
    check_dims(z, g_pool)?;
    check_dims(z, g_an)?;
    z.iter()
        .enumerate()
        .map(|(d, &zd)| {
            Ok(ln_erf_tail_likelihood(zd, g_pool.mean()[d], g_pool.std()[d])?
                - ln_erf_tail_likelihood(zd, g_an.mean()[d], g_an.std()[d])?)
        })
        .collect()
}

/// Log-likelihood ratio of `z` under the pool fit versus the annotated fit.
/// Large values mark regions the pool covers but the annotated set does not.
pub fn bsq_log_ratio(z: &[f64], g_pool: &DiagGaussian, g_an: &DiagGaussian) -> Result<f64> {
    Ok(bsq_terms(z, g_pool, g_an)?.iter().sum())
}

fn ln_collapsed(z: &[f64], g: &DiagGaussian) -> Result<f64> {
    let (mu, sigma) = g.joint_1d();
    let parts: Vec<(f64, f64)> = z.iter().copied().zip(g.std().iter().copied()).collect();
    let (z_star, _) = gaussian_product(&parts)?;
    ln_erf_tail_likelihood(z_star, mu, sigma)
}

pub fn bsq_log_ratio_with(
    z: &[f64],
    g_pool: &DiagGaussian,
    g_an: &DiagGaussian,
    aggregation: Aggregation,
) -> Result<f64> {
    match aggregation {
        Aggregation::PerDimension => bsq_log_ratio(z, g_pool, g_an),
        Aggregation::ProductGaussian => {
            check_dims(z, g_pool)?;
            check_dims(z, g_an)?;
            Ok(ln_collapsed(z, g_pool)? - ln_collapsed(z, g_an)?)
        }
    }
}

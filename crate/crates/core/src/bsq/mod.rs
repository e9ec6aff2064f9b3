//! Bayesian sample querying in latent space.
//!
//! Both the full pool and the annotated subset are summarized by
//! axis-aligned Gaussians. A candidate `z` is scored by
//!
//! ```text
//! score(z) = sum_d [ ln q(z_d | pool_d) - ln q(z_d | an_d) ]
//! q(z_d | mu, sigma) = 1 + erf(-|z_d - mu| / (sigma * sqrt 2))
//! ```
//!
//! so samples that are typical of the pool but atypical of what is already
//! annotated rank first. The MMD statistic is provided as an alignment
//! diagnostic between the two sets.

mod gaussian;
mod likelihood;
mod mmd;
mod select;

pub use gaussian::{fit_diag_gaussian, fit_diag_gaussian_rows, gaussian_product, DiagGaussian, STD_FLOOR};
pub use likelihood::{
    bsq_log_ratio, bsq_log_ratio_with, bsq_terms, erf_tail_likelihood, ln_erf_tail_likelihood, ln_erfc,
    Aggregation,
};
pub use mmd::{mmd, Kernel, MmdReference};
pub use select::{
    score_candidates, score_candidates_detailed, select_bsq, select_bsq_sequential, select_bsq_with, BsqMode,
    BsqScore,
};

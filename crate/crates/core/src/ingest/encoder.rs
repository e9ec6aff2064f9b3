//! Linear encoders mapping raw feature rows to latent embeddings.
//!
//! These stand in for a trained image encoder: the selection math only ever
//! sees the latent matrix, so any encoder whose output is written to a matrix
//! CSV can be swapped in.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::pool::Matrix;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Pca,
    RandomProjection,
}

/// `z = (x - offset) * projection`, with `projection` of shape
/// `d_in x n_lat`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearEncoder {
    kind: EncoderKind,
    projection: Matrix,
    offset: Vec<f64>,
    explained_variance: Vec<f64>,
    total_variance: f64,
    zero_variance_components: usize,
}

impl LinearEncoder {
    pub fn kind(&self) -> EncoderKind {
        self.kind
    }

    pub fn d_in(&self) -> usize {
        self.projection.rows()
    }

    pub fn n_lat(&self) -> usize {
        self.projection.cols()
    }

    pub fn projection(&self) -> &Matrix {
        &self.projection
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// Variance captured by each component (PCA only; empty otherwise).
    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        if self.total_variance <= 0.0 {
            return vec![0.0; self.explained_variance.len()];
        }
        self.explained_variance
            .iter()
            .map(|v| v / self.total_variance)
            .collect()
    }

    /// Number of requested components that carry no variance. Non-zero
    /// means the fit was padded with arbitrary orthogonal directions.
    pub fn zero_variance_components(&self) -> usize {
        self.zero_variance_components
    }

    pub fn encode(&self, input: &Matrix) -> Result<Matrix> {
        ensure!(
            input.cols() == self.d_in(),
            Shape,
            "encoder expects {} input columns, got {}",
            self.d_in(),
            input.cols()
        );
        let k = self.n_lat();
        let mut out = Matrix::zeros(input.rows(), k);
        let mut centered = vec![0.0; self.d_in()];
        for i in 0..input.rows() {
            for (c, (x, o)) in centered.iter_mut().zip(input.row(i).iter().zip(&self.offset)) {
                *c = x - o;
            }
            let row = out.row_mut(i);
            for (d, &x) in centered.iter().enumerate() {
                let p = self.projection.row(d);
                for j in 0..k {
                    row[j] += x * p[j];
                }
            }
        }
        Ok(out)
    }

    /// Maps embeddings back to input space (`z * projection^T + offset`).
    /// Exact inverse of [`encode`](Self::encode) for a full-rank PCA basis.
    pub fn decode(&self, latent: &Matrix) -> Result<Matrix> {
        ensure!(
            latent.cols() == self.n_lat(),
            Shape,
            "decoder expects {} latent columns, got {}",
            self.n_lat(),
            latent.cols()
        );
        let mut out = Matrix::zeros(latent.rows(), self.d_in());
        for i in 0..latent.rows() {
            let z = latent.row(i);
            let row = out.row_mut(i);
            for (d, r) in row.iter_mut().enumerate() {
                let p = self.projection.row(d);
                *r = self.offset[d] + z.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        Ok(out)
    }
}

fn column_means(m: &Matrix) -> Vec<f64> {
    let mut means = vec![0.0; m.cols()];
    for row in m.iter_rows() {
        for (acc, v) in means.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let n = m.rows().max(1) as f64;
    means.iter_mut().for_each(|v| *v /= n);
    means
}

/// Fits a PCA encoder via eigendecomposition of the sample covariance.
///
/// Components come out ordered by non-increasing explained variance, each
/// with its largest-magnitude loading made positive so fits are
/// reproducible. Requesting more components than the data has rank pads the
/// basis with zero-variance directions and logs a warning.
pub fn fit_pca(input: &Matrix, n_lat: usize) -> Result<LinearEncoder> {
    ensure!(input.is_finite(), Data, "PCA input contains non-finite values");
    ensure!(n_lat >= 1, Config, "n_lat must be at least 1");
    ensure!(
        n_lat <= input.cols(),
        Config,
        "n_lat={n_lat} exceeds input dimensionality {}",
        input.cols()
    );
    ensure!(input.rows() >= 2, Config, "PCA needs at least two rows");

    let (m, d) = (input.rows(), input.cols());
    let offset = column_means(input);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for row in input.iter_rows() {
        for (c, (x, o)) in centered.iter_mut().zip(row.iter().zip(&offset)) {
            *c = x - o;
        }
        for a in 0..d {
            let ca = centered[a];
            if ca == 0.0 {
                continue;
            }
            for b in a..d {
                cov[(a, b)] += ca * centered[b];
            }
        }
    }
    let denom = (m - 1) as f64;
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let total_variance: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let tol = 1e-12 * total_variance.max(f64::MIN_POSITIVE);
    let mut projection = Matrix::zeros(d, n_lat);
    let mut explained = Vec::with_capacity(n_lat);
    let mut zero_var = 0;
    for (j, &k) in order.iter().take(n_lat).enumerate() {
        let lambda = eig.eigenvalues[k].max(0.0);
        if lambda <= tol || j >= m - 1 {
            zero_var += 1;
        }
        explained.push(lambda);
        let v = eig.eigenvectors.column(k);
        let pivot = (0..d)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
            .expect("d >= 1");
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..d {
            projection.row_mut(r)[j] = sign * v[r];
        }
    }
    if zero_var > 0 {
        log::warn!("PCA: {zero_var} of {n_lat} components carry zero variance");
    }
    Ok(LinearEncoder {
        kind: EncoderKind::Pca,
        projection,
        offset,
        explained_variance: explained,
        total_variance,
        zero_variance_components: zero_var,
    })
}

/// Gaussian random projection with entries drawn from `N(0, 1/n_lat)`,
/// centered on the column means of `input`.
pub fn fit_random_projection(input: &Matrix, n_lat: usize, seed: u64) -> Result<LinearEncoder> {
    ensure!(input.is_finite(), Data, "projection input contains non-finite values");
    ensure!(n_lat >= 1, Config, "n_lat must be at least 1");
    ensure!(
        n_lat <= input.cols(),
        Config,
        "n_lat={n_lat} exceeds input dimensionality {}",
        input.cols()
    );
    let mut rng = seed::rng_from(seed::derive_seed(seed, "random-projection"));
    let normal = Normal::new(0.0, 1.0 / (n_lat as f64).sqrt()).expect("positive std");
    let data = (0..input.cols() * n_lat).map(|_| normal.sample(&mut rng)).collect();
    Ok(LinearEncoder {
        kind: EncoderKind::RandomProjection,
        projection: Matrix::from_vec(input.cols(), n_lat, data)?,
        offset: column_means(input),
        explained_variance: Vec::new(),
        total_variance: 0.0,
        zero_variance_components: 0,
    })
}

/// Standardizes each row to zero mean and unit variance. Constant rows are
/// only centered.
pub fn standardize_rows(input: &Matrix) -> Matrix {
    let mut out = input.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let n = row.len() as f64;
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        row.iter_mut().for_each(|v| *v = (*v - mean) / scale);
    }
    out
}

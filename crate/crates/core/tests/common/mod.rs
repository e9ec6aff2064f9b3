#![allow(dead_code)]

use alquery::pool::Matrix;
use alquery::seed::{rng_from, Rng};
use rand::Rng as _;

pub fn rng(seed: u64) -> Rng {
    rng_from(seed)
}

pub fn random_matrix(rng: &mut Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Standard normal density.
pub fn phi(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Two-sided Gaussian tail mass beyond `|z - mean|`, by quadrature of the
/// density over `[a, a + 12]` in standard units.
pub fn tail_by_quadrature(z: f64, mean: f64, std: f64) -> f64 {
    let a = (z - mean).abs() / std;
    2.0 * simpson(phi, a, a + 12.0, 4000)
}

/// Per-dimension log ratio from quadrature tails.
pub fn log_ratio_by_quadrature(z: &[f64], pool: (&[f64], &[f64]), an: (&[f64], &[f64])) -> f64 {
    (0..z.len())
        .map(|d| {
            tail_by_quadrature(z[d], pool.0[d], pool.1[d]).ln()
                - tail_by_quadrature(z[d], an.0[d], an.1[d]).ln()
        })
        .sum()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Greedy set cover by recomputing the full objective for every candidate
/// at every step.
pub fn set_cover_by_enumeration(cands: &[Vec<f64>], universe: &[Vec<f64>], n_rep: usize) -> Vec<usize> {
    let objective = |sel: &[usize]| -> f64 {
        universe
            .iter()
            .map(|u| sel.iter().map(|&j| cosine(u, &cands[j])).fold(f64::NEG_INFINITY, f64::max))
            .sum()
    };
    let mut sel: Vec<usize> = Vec::new();
    while sel.len() < n_rep.min(cands.len()) {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..cands.len() {
            if sel.contains(&j) {
                continue;
            }
            let mut trial = sel.clone();
            trial.push(j);
            let v = objective(&trial);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        sel.push(best.unwrap().0);
    }
    sel
}

/// Brute-force symmetric mean surface distance over all point pairs.
pub fn msd_all_pairs(a: &[[usize; 3]], b: &[[usize; 3]]) -> f64 {
    let d = |p: &[usize; 3], q: &[usize; 3]| -> f64 {
        (0..3).map(|k| (p[k] as f64 - q[k] as f64).powi(2)).sum::<f64>()
    };
    let side = |from: &[[usize; 3]], to: &[[usize; 3]]| -> f64 {
        from.iter()
            .map(|p| to.iter().map(|q| d(p, q)).fold(f64::INFINITY, f64::min).sqrt())
            .sum()
    };
    (side(a, b) + side(b, a)) / (a.len() + b.len()) as f64
}

/// Biased MMD with the squared-distance Gaussian kernel, written out
/// directly.
pub fn mmd_direct(x: &Matrix, y: &Matrix, sigma: f64) -> f64 {
    let k = |a: &[f64], b: &[f64]| {
        let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
        (-d2 / (2.0 * sigma * sigma)).exp()
    };
    let mean = |p: &Matrix, q: &Matrix| {
        let mut s = 0.0;
        for a in p.iter_rows() {
            for b in q.iter_rows() {
                s += k(a, b);
            }
        }
        s / (p.rows() * q.rows()) as f64
    };
    mean(x, x) + mean(y, y) - 2.0 * mean(x, y)
}

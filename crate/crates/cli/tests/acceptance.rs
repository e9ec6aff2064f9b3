//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if
//! any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use alquery::bsq::{
    bsq_log_ratio, erf_tail_likelihood, fit_diag_gaussian, fit_diag_gaussian_rows, mmd, score_candidates,
    select_bsq, Aggregation, BsqMode, DiagGaussian, Kernel,
};
use alquery::ingest::{imbalanced_priors, parse_idx, read_idx, serialize_idx, synth_clusters, RawTensor, SynthConfig};
use alquery::metrics::{class_entropy, dice, extract_contour, msd, BinaryMask};
use alquery::pool::{draw_initial, Matrix};
use alquery::scoring::{greedy_set_cover, Descriptor};
use alquery::seed::{rng_from, Rng};
use alquery::simulate::{run_experiment, ExperimentLog, StrategyConfig, StrategyKind};
use alquery::SamplePool;
use rand::Rng as _;

type Outcome = Result<String, String>;

struct Suite {
    failed: Vec<&'static str>,
}

impl Suite {
    fn check(&mut self, name: &'static str, f: impl FnOnce() -> Outcome) {
        match f() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                self.failed.push(name);
            }
        }
    }
}

fn main() {
    let mut s = Suite { failed: Vec::new() };
    println!(
        "SKIP segmentation-results: MRI Dice/MSD tables need the private dataset and network training; \
         covered by the checks below"
    );
    let appendix = AppendixRuns::new();
    s.check("appendix-entropy", || appendix.entropy());
    s.check("annotated-spread", || appendix.spread());
    s.check("bsq-vs-random-imbalance", bsq_vs_random);
    s.check("setcover-oracle", setcover_oracle);
    s.check("bsq-oracle", bsq_oracle);
    s.check("erf-likelihood", erf_likelihood);
    s.check("mmd", mmd_checks);
    s.check("affine-invariance", affine_invariance);
    s.check("metrics", metrics_checks);
    s.check("determinism", determinism);
    s.check("idx-round-trip", idx_round_trip);

    println!("{} failed", s.failed.len());
    if !s.failed.is_empty() {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- oracles

fn phi(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Two-sided Gaussian tail mass beyond `|z - mean|` by Simpson quadrature
/// of the density.
fn tail_by_quadrature(z: f64, mean: f64, std: f64) -> f64 {
    let a = (z - mean).abs() / std;
    let (b, n) = (a + 12.0, 4000);
    let h = (b - a) / n as f64;
    let mut s = phi(a) + phi(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * phi(a + k as f64 * h);
    }
    2.0 * s * h / 3.0
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn random_matrix(rng: &mut Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

// ------------------------------------------------------ imbalanced protocol

fn imbalanced_setup(seed: u64) -> (SamplePool, Vec<u64>) {
    let pool = synth_clusters(&SynthConfig::new(10, 500, 5, seed)).unwrap();
    let priors = imbalanced_priors(10, 3, 10.0, seed).unwrap();
    let init = draw_initial(&pool, &priors, 10, seed)
        .unwrap()
        .into_iter()
        .map(|i| pool.id(i))
        .collect();
    (pool, init)
}

fn protocol_config(kind: StrategyKind, seed: u64) -> StrategyConfig {
    let mut cfg = StrategyConfig::sample_defaults(kind, seed);
    cfg.n_unc = None;
    cfg.n_rep = 10;
    cfg
}

struct AppendixRuns {
    runs: Vec<(SamplePool, ExperimentLog)>,
    seconds: f64,
}

impl AppendixRuns {
    fn new() -> Self {
        let t = Instant::now();
        let runs = (0..5)
            .map(|seed| {
                let (pool, init) = imbalanced_setup(seed);
                let log = run_experiment(&pool, &init, &protocol_config(StrategyKind::Bsq, seed), 30).unwrap();
                (pool, log)
            })
            .collect();
        Self {
            runs,
            seconds: t.elapsed().as_secs_f64(),
        }
    }

    fn entropy(&self) -> Outcome {
        let mut rhos = Vec::new();
        let mut finals = Vec::new();
        for (_, log) in &self.runs {
            let h = log.entropy_series();
            if h.len() != 31 {
                return Err(format!("expected 31 entropy values, got {}", h.len()));
            }
            let it: Vec<f64> = (0..h.len()).map(|i| i as f64).collect();
            rhos.push(spearman(&it, &h));
            finals.push(h[30]);
        }
        let mean_rho = rhos.iter().sum::<f64>() / rhos.len() as f64;
        let min_final = finals.iter().copied().fold(f64::INFINITY, f64::min);
        let detail = format!(
            "mean spearman {mean_rho:.4} (> 0.9), final entropies {:?} (>= 2.0, cap {:.4}), {:.1}s (< 60s)",
            finals.iter().map(|h| (h * 1e4).round() / 1e4).collect::<Vec<_>>(),
            10f64.ln(),
            self.seconds
        );
        if mean_rho > 0.9 && min_final >= 2.0 && self.seconds < 60.0 {
            Ok(detail)
        } else {
            Err(detail)
        }
    }

    fn spread(&self) -> Outcome {
        let mut worst: f64 = 1.0;
        let mut ratios = Vec::new();
        for (pool, log) in &self.runs {
            let g_pool = fit_diag_gaussian(pool.embeddings()).unwrap();
            let std_an = log.iterations[30].g_an_std.as_ref().ok_or("no G_an at iteration 30")?;
            let ok = std_an.iter().zip(g_pool.std()).filter(|(a, p)| **a >= 0.9 * **p).count();
            let frac = ok as f64 / std_an.len() as f64;
            worst = worst.min(frac);
            ratios.extend(std_an.iter().zip(g_pool.std()).map(|(a, p)| a / p));
        }
        let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let detail = format!(
            "worst run has {:.0}% of dims with std >= 0.9x pool std (need >= 90%); smallest ratio {min_ratio:.3}",
            worst * 100.0
        );
        if worst >= 0.9 {
            Ok(detail)
        } else {
            Err(detail)
        }
    }
}

fn mean_entropy_at(kind: StrategyKind, mode: BsqMode, iter: usize, seeds: u64) -> f64 {
    let mut total = 0.0;
    for seed in 0..seeds {
        let (pool, init) = imbalanced_setup(seed);
        let mut cfg = protocol_config(kind, seed);
        cfg.bsq_mode = mode;
        cfg.log_mmd = false;
        let log = run_experiment(&pool, &init, &cfg, iter).unwrap();
        total += log.iterations[iter].entropy.unwrap();
    }
    total / seeds as f64
}

fn bsq_vs_random() -> Outcome {
    const SEEDS: u64 = 20;
    let random = mean_entropy_at(StrategyKind::Random, BsqMode::OneShot, 3, SEEDS);
    let bsq = mean_entropy_at(StrategyKind::Bsq, BsqMode::OneShot, 3, SEEDS);
    let refit = mean_entropy_at(StrategyKind::Bsq, BsqMode::SequentialRefit, 3, SEEDS);
    let detail = format!(
        "{SEEDS} seeds, iteration 3: bsq (one-shot, default) {bsq:.4} vs random {random:.4}; \
         for reference bsq with sequential refit {refit:.4}"
    );
    if bsq >= random {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ------------------------------------------------------------- selection

fn setcover_oracle() -> Outcome {
    let mut rng = rng_from(101);
    const TRIALS: usize = 250;
    for trial in 0..TRIALS {
        let n_cand = rng.random_range(1..=12);
        let n_uni = rng.random_range(1..=20);
        let dims = rng.random_range(2..=8);
        let n_rep = rng.random_range(1..=3);
        let mut vecs = |n: usize| -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| (0..dims).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect()
        };
        let cands = vecs(n_cand);
        let uni = vecs(n_uni);
        let desc = |v: &[Vec<f64>]| -> Vec<Descriptor> {
            v.iter()
                .enumerate()
                .map(|(i, x)| Descriptor::new(i as u64, x.clone()).unwrap())
                .collect()
        };
        let got = greedy_set_cover(&desc(&cands), &desc(&uni), n_rep).map_err(|e| e.to_string())?;

        // exhaustive argmax of the full objective at every step
        let objective = |sel: &[usize]| -> f64 {
            uni.iter()
                .map(|u| sel.iter().map(|&j| cosine(u, &cands[j])).fold(f64::NEG_INFINITY, f64::max))
                .sum()
        };
        let mut sel: Vec<usize> = Vec::new();
        for step in 0..n_rep.min(n_cand) {
            let mut best: Option<(usize, f64)> = None;
            for j in (0..n_cand).filter(|j| !sel.contains(j)) {
                let v = objective(&[sel.as_slice(), &[j]].concat());
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            let want = best.unwrap().0;
            if got.get(step) != Some(&want) {
                return Err(format!("trial {trial} step {step}: greedy {got:?}, exhaustive picks {want}"));
            }
            sel.push(want);
        }
        if got.len() != sel.len() {
            return Err(format!("trial {trial}: {} picks, expected {}", got.len(), sel.len()));
        }
    }
    Ok(format!("{TRIALS} instances, every step equal to exhaustive argmax"))
}

fn bsq_oracle() -> Outcome {
    let mut rng = rng_from(102);
    let mut worst: f64 = 0.0;
    const TRIALS: usize = 300;
    for trial in 0..TRIALS {
        let n = rng.random_range(1..=12);
        let d = rng.random_range(1..=6);
        let emb = random_matrix(&mut rng, n, d, 3.0);
        let mut gauss = |lo: f64| {
            let mean: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let std: Vec<f64> = (0..d).map(|_| rng.random_range(lo..2.0)).collect();
            (mean, std)
        };
        let (pm, ps) = gauss(0.5);
        let (am, as_) = gauss(0.3);
        let pool = DiagGaussian::new(pm.clone(), ps.clone()).unwrap();
        let an = DiagGaussian::new(am.clone(), as_.clone()).unwrap();
        let cand: Vec<usize> = (0..n).collect();
        let n_rep = rng.random_range(1..=n);

        let scores: Vec<f64> = cand.iter().map(|&i| bsq_log_ratio(emb.row(i), &pool, &an).unwrap()).collect();
        let mut sorted = cand.clone();
        sorted.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        sorted.truncate(n_rep);
        let got = select_bsq(&cand, &emb, &pool, &an, n_rep).map_err(|e| e.to_string())?;
        if got != sorted {
            return Err(format!("trial {trial}: select_bsq {got:?}, score sort {sorted:?}"));
        }
        for (i, s) in scores.iter().enumerate() {
            let z = emb.row(i);
            let brute: f64 = (0..d)
                .map(|k| tail_by_quadrature(z[k], pm[k], ps[k]).ln() - tail_by_quadrature(z[k], am[k], as_[k]).ln())
                .sum();
            worst = worst.max((s - brute).abs());
        }
    }
    let detail = format!("{TRIALS} instances equal to score sort; worst log-ratio deviation from quadrature {worst:.2e} (< 1e-6)");
    if worst < 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn erf_likelihood() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for i in 0..10 {
        for j in 0..10 {
            for k in 0..10 {
                let z = -5.0 + 10.0 * i as f64 / 9.0;
                let mean = -2.0 + 4.0 * j as f64 / 9.0;
                let std = 0.2 + 2.8 * k as f64 / 9.0;
                let got = erf_tail_likelihood(z, mean, std).map_err(|e| e.to_string())?;
                worst = worst.max((got - tail_by_quadrature(z, mean, std)).abs());
                n += 1;
            }
        }
    }
    let one_sigma = erf_tail_likelihood(1.5 + 0.7, 1.5, 0.7).map_err(|e| e.to_string())?;
    let detail = format!("{n} grid points, worst deviation {worst:.2e} (< 1e-6); z = mean + std gives {one_sigma:.6}");
    if worst < 1e-6 && (one_sigma - 0.31731).abs() < 1e-5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mmd_checks() -> Outcome {
    let k = Kernel::Gaussian { sigma: 1.0 };
    let x = Matrix::from_rows(&[[0.0]]).unwrap();
    let y = Matrix::from_rows(&[[2.0]]).unwrap();
    let two = mmd(&x, &y, k).map_err(|e| e.to_string())?;
    let closed = 1.0 + 1.0 - 2.0 * (-2.0f64).exp();
    if (two - closed).abs() > 1e-9 || format!("{two:.5}") != "1.72933" {
        return Err(format!("two-point value {two}, expected 1 + 1 - 2 exp(-2) = {closed}"));
    }
    let mut rng = rng_from(103);
    let mut worst_self: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    let mut worst_perm: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.random_range(1..=5);
        let (nx, ny) = (rng.random_range(1..=15), rng.random_range(1..=15));
        let a = random_matrix(&mut rng, nx, d, 3.0);
        let b = random_matrix(&mut rng, ny, d, 3.0);
        let mut order: Vec<usize> = (0..nx).collect();
        for i in (1..nx).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let ab = mmd(&a, &b, k).unwrap();
        worst_self = worst_self.max(mmd(&a, &a, k).unwrap().abs());
        worst_sym = worst_sym.max((ab - mmd(&b, &a, k).unwrap()).abs());
        worst_perm = worst_perm.max((ab - mmd(&a.select_rows(&order), &b, k).unwrap()).abs());
    }
    let detail = format!(
        "two-point {two:.12}; over 100 pairs max |mmd(X,X)| {worst_self:.1e}, asymmetry {worst_sym:.1e}, \
         permutation change {worst_perm:.1e}"
    );
    if worst_self <= 1e-12 && worst_sym <= 1e-12 && worst_perm <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn affine_invariance() -> Outcome {
    let mut rng = rng_from(104);
    let mut worst: f64 = 0.0;
    const TRIALS: usize = 50;
    for trial in 0..TRIALS {
        let n = rng.random_range(30..=80);
        let d = rng.random_range(1..=8);
        let emb = random_matrix(&mut rng, n, d, 4.0);
        let scale: Vec<f64> = (0..d).map(|_| rng.random_range(0.01..100.0)).collect();
        let shift: Vec<f64> = (0..d).map(|_| rng.random_range(-50.0..50.0)).collect();
        let mapped = emb.map_columns(|k, v| scale[k] * v + shift[k]);
        let n_an = rng.random_range(3..n / 2);
        let an: Vec<usize> = (0..n_an).collect();
        let cand: Vec<usize> = (n_an..n).collect();
        let n_rep = rng.random_range(1..=cand.len().min(10));
        let eval = |m: &Matrix| {
            let gp = fit_diag_gaussian(m).unwrap();
            let ga = fit_diag_gaussian_rows(m, &an).unwrap();
            let s = score_candidates(&cand, m, &gp, &ga, Aggregation::PerDimension).unwrap();
            let mut pick = select_bsq(&cand, m, &gp, &ga, n_rep).unwrap();
            pick.sort_unstable();
            (s, pick)
        };
        let (s0, p0) = eval(&emb);
        let (s1, p1) = eval(&mapped);
        for (a, b) in s0.iter().zip(&s1) {
            worst = worst.max((a.score - b.score).abs());
        }
        if p0 != p1 {
            return Err(format!("trial {trial}: selection changed from {p0:?} to {p1:?}"));
        }
    }
    let detail = format!("{TRIALS} trials, identical selections, worst score change {worst:.2e} (<= 1e-9)");
    if worst <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// --------------------------------------------------------------- metrics

fn voxel_mask(dims: (usize, usize, usize), on: &[[usize; 3]]) -> BinaryMask {
    let mut m = BinaryMask::empty(dims).unwrap();
    for p in on {
        m.set(p[0], p[1], p[2], true);
    }
    m
}

fn metrics_checks() -> Outcome {
    let dims = (4, 4, 4);
    let e = |msg: &str| Err::<String, String>(msg.to_string());
    let a = voxel_mask(dims, &[[0, 0, 0], [0, 0, 1], [0, 1, 0], [0, 1, 1]]);
    let b = voxel_mask(dims, &[[0, 0, 0], [0, 0, 1], [3, 3, 2], [3, 3, 3]]);
    let c = voxel_mask(dims, &[[2, 2, 2]]);
    let empty = BinaryMask::empty(dims).unwrap();
    if dice(&a, &a).unwrap() != Some(1.0) {
        return e("dice of identical masks is not 1");
    }
    if dice(&a, &c).unwrap() != Some(0.0) {
        return e("dice of disjoint masks is not 0");
    }
    if dice(&a, &b).unwrap() != Some(0.5) {
        return e("dice with |S|=|G|=4, overlap 2 is not 0.5");
    }
    if dice(&empty, &empty).unwrap().is_some() {
        return e("dice of two empty masks is defined");
    }

    let single = extract_contour(&c);
    if single.points() != [[2, 2, 2]] {
        return e("contour of a single voxel is not that voxel");
    }
    let mut cube = BinaryMask::empty((5, 5, 5)).unwrap();
    for z in 1..4 {
        for y in 1..4 {
            for x in 1..4 {
                cube.set(z, y, x, true);
            }
        }
    }
    let shell = extract_contour(&cube);
    if shell.len() != 26 || shell.points().contains(&[2, 2, 2]) {
        return Err(format!("3x3x3 cube contour has {} voxels", shell.len()));
    }
    if !extract_contour(&empty).is_empty() {
        return e("contour of empty mask is not empty");
    }

    let big = (4, 4, 4);
    let p0 = extract_contour(&voxel_mask(big, &[[0, 0, 0]]));
    let p3 = extract_contour(&voxel_mask(big, &[[3, 0, 0]]));
    let p111 = extract_contour(&voxel_mask(big, &[[1, 1, 1]]));
    if msd(&p0, &p3).unwrap() != 3.0 {
        return e("msd between (0,0,0) and (3,0,0) is not 3");
    }
    if msd(&p0, &p111).unwrap() != 3f64.sqrt() {
        return e("msd between (0,0,0) and (1,1,1) is not sqrt(3)");
    }
    if msd(&shell, &shell).unwrap() != 0.0 {
        return e("msd of identical contours is not 0");
    }
    let h2 = class_entropy(&[0, 1, 0, 1]).unwrap();
    let h10 = class_entropy(&(0..50).map(|i| i % 10).collect::<Vec<u32>>()).unwrap();
    if class_entropy(&[3, 3, 3]).unwrap() != 0.0
        || (h2 - 2f64.ln()).abs() > 1e-9
        || (h10 - 10f64.ln()).abs() > 1e-9
    {
        return Err(format!("entropy examples off: H2 {h2}, H10 {h10}"));
    }

    // MSD against all point pairs
    let mut rng = rng_from(105);
    let mut compared = 0;
    for _ in 0..80 {
        let dims = (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=8));
        let n = dims.0 * dims.1 * dims.2;
        let (fa, fb) = (rng.random_range(0.02..0.7), rng.random_range(0.02..0.7));
        let ma = BinaryMask::new(dims, (0..n).map(|_| rng.random_bool(fa)).collect()).unwrap();
        let mb = BinaryMask::new(dims, (0..n).map(|_| rng.random_bool(fb)).collect()).unwrap();
        let (ca, cb) = (extract_contour(&ma), extract_contour(&mb));
        if ca.is_empty() || cb.is_empty() {
            continue;
        }
        let side = |from: &[[usize; 3]], to: &[[usize; 3]]| -> f64 {
            from.iter()
                .map(|p| {
                    to.iter()
                        .map(|q| (0..3).map(|k| (p[k] as f64 - q[k] as f64).powi(2)).sum::<f64>())
                        .fold(f64::INFINITY, f64::min)
                        .sqrt()
                })
                .sum()
        };
        let brute = (side(ca.points(), cb.points()) + side(cb.points(), ca.points())) / (ca.len() + cb.len()) as f64;
        let got = msd(&ca, &cb).unwrap();
        if got != brute {
            return Err(format!("msd {got} vs all-pairs {brute} on {dims:?}"));
        }
        compared += 1;
    }
    Ok(format!(
        "dice/contour/msd/entropy examples exact; msd equal to all-pairs oracle on {compared} random masks up to 8^3"
    ))
}

// ------------------------------------------------------------------ runs

fn alquery(dir: &Path, threads: &str, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_alquery"))
        .current_dir(dir)
        .env("ALQUERY_THREADS", threads)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    alquery(d, "2", &["synth", "--classes", "5", "--per-class", "60", "--dims", "4", "--seed", "8", "--out", "pool.csv"])?;
    let mut compared = 0;
    for strategy in ["random", "uncertainty", "setcover", "bsq", "upperbound"] {
        let mut outputs: Vec<Vec<u8>> = Vec::new();
        for (k, threads) in ["1", "1", "4"].iter().enumerate() {
            let out = format!("{strategy}{k}.json");
            alquery(d, threads, &[
                "run", "--pool", "pool.csv", "--strategy", strategy, "--batch", "5", "--n-unc", "20",
                "--iters", "4", "--seed", "13", "--holdout", "0.8,0.1,0.1", "--out", &out,
            ])?;
            outputs.push(fs::read(d.join(&out)).map_err(|e| e.to_string())?);
        }
        if outputs.iter().any(|o| *o != outputs[0]) {
            return Err(format!("{strategy}: logs differ between identical invocations"));
        }
        compared += 1;
    }
    Ok(format!(
        "{compared} strategies, byte-identical logs across repeats and thread counts 1/4"
    ))
}

fn mnist_path() -> Option<PathBuf> {
    let candidates = [
        std::env::var_os("ALQUERY_MNIST_IMAGES").map(PathBuf::from),
        Some(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/train-images-idx3-ubyte")),
    ];
    candidates.into_iter().flatten().find(|p| p.exists())
}

fn idx_round_trip() -> Outcome {
    let mut rng = rng_from(106);
    for trial in 0..100 {
        let rank = rng.random_range(1..=4);
        let dims: Vec<usize> = (0..rank).map(|_| rng.random_range(1..=7)).collect();
        let n: usize = dims.iter().product();
        let data: Vec<u8> = (0..n).map(|_| rng.random()).collect();
        let t = RawTensor::new(dims, data).map_err(|e| e.to_string())?;
        let back = parse_idx(&serialize_idx(&t)).map_err(|e| e.to_string())?;
        if back != t {
            return Err(format!("trial {trial}: round trip changed the tensor"));
        }
    }
    let mnist = match mnist_path() {
        Some(p) => {
            let t = read_idx(&p).map_err(|e| format!("{}: {e}", p.display()))?;
            if t.dims() != [60000, 28, 28] {
                return Err(format!("{} has dims {:?}", p.display(), t.dims()));
            }
            "MNIST header parsed to [60000, 28, 28]".to_string()
        }
        None => "MNIST file absent, header check skipped".to_string(),
    };
    Ok(format!("100 random tensors round-trip; {mnist}"))
}

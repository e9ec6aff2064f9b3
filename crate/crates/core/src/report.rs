//! Plot-ready tables from experiment logs: a long-format metric table and
//! per-strategy-pair difference summaries (median, quartiles, mean).

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::simulate::ExperimentLog;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LongRow {
    pub strategy: String,
    pub iteration: usize,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffRow {
    pub strategy_a: String,
    pub strategy_b: String,
    pub iteration: usize,
    pub metric: String,
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub mean: f64,
}

/// Metric values present in one log record, in a fixed order.
fn record_metrics(log: &ExperimentLog, k: usize) -> Vec<(&'static str, f64)> {
    let r = &log.iterations[k];
    let mut out = vec![("n_annotated", r.n_annotated as f64)];
    let optional = [("entropy", r.entropy), ("mmd", r.mmd), ("dice", r.dice), ("msd", r.msd)];
    out.extend(optional.into_iter().filter_map(|(n, v)| v.map(|v| (n, v))));
    if let (Some(mean), Some(std)) = (&r.g_an_mean, &r.g_an_std) {
        let parts: Vec<(f64, f64)> = mean.iter().copied().zip(std.iter().copied()).collect();
        if let Ok((m, s)) = crate::bsq::gaussian_product(&parts) {
            out.push(("g_an_joint_mean", m));
            out.push(("g_an_joint_std", s));
        }
    }
    out
}

/// One row per (log, iteration, metric).
pub fn long_format(logs: &[ExperimentLog]) -> Vec<LongRow> {
    let mut rows = Vec::new();
    for log in logs {
        for (k, rec) in log.iterations.iter().enumerate() {
            for (metric, value) in record_metrics(log, k) {
                rows.push(LongRow {
                    strategy: log.strategy_name().to_string(),
                    iteration: rec.iter,
                    metric: metric.to_string(),
                    value,
                    seed: log.config.strategy.seed,
                });
            }
        }
    }
    rows
}

/// Quantile of sorted data with linear interpolation between order
/// statistics (position `q * (n - 1)`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summary of paired differences between every two strategies.
///
/// Logs of each strategy are sorted by seed and paired positionally (the
/// i-th holdout of A against the i-th of B). Pairs of unequal length are
/// truncated to their common iterations with a warning.
pub fn difference_table(logs: &[ExperimentLog]) -> Vec<DiffRow> {
    let mut by_strategy: BTreeMap<&str, Vec<&ExperimentLog>> = BTreeMap::new();
    for log in logs {
        by_strategy.entry(log.strategy_name()).or_default().push(log);
    }
    for v in by_strategy.values_mut() {
        v.sort_by_key(|l| l.config.strategy.seed);
    }
    let names: Vec<&str> = by_strategy.keys().copied().collect();
    let mut rows = Vec::new();
    for (ai, a) in names.iter().enumerate() {
        for b in &names[ai + 1..] {
            // (iteration, metric) -> differences across holdouts
            let mut diffs: BTreeMap<(usize, &'static str), Vec<f64>> = BTreeMap::new();
            for (la, lb) in by_strategy[a].iter().zip(&by_strategy[b]) {
                let common = la.iterations.len().min(lb.iterations.len());
                if la.iterations.len() != lb.iterations.len() {
                    log::warn!(
                        "{a} (seed {}) has {} iterations, {b} (seed {}) has {}; truncating to {common}",
                        la.config.strategy.seed,
                        la.iterations.len(),
                        lb.config.strategy.seed,
                        lb.iterations.len()
                    );
                }
                for k in 0..common {
                    let mb: BTreeMap<_, _> = record_metrics(lb, k).into_iter().collect();
                    for (metric, va) in record_metrics(la, k) {
                        if let Some(vb) = mb.get(metric) {
                            diffs.entry((k, metric)).or_default().push(va - vb);
                        }
                    }
                }
            }
            for ((iteration, metric), mut d) in diffs {
                d.sort_by(f64::total_cmp);
                rows.push(DiffRow {
                    strategy_a: a.to_string(),
                    strategy_b: b.to_string(),
                    iteration,
                    metric: metric.to_string(),
                    n: d.len(),
                    median: quantile(&d, 0.5),
                    q1: quantile(&d, 0.25),
                    q3: quantile(&d, 0.75),
                    mean: d.iter().sum::<f64>() / d.len() as f64,
                });
            }
        }
    }
    rows
}

pub fn write_rows<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

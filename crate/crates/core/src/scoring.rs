//! Uncertainty from Monte-Carlo prediction stacks and the set-cover
//! representativeness baseline.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{ensure, Error, Result};

/// Stochastic predictions for one sample: `n_mc` draws of per-pixel class
/// probabilities, stored as `[mc][pixel][label]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionStack {
    sample_id: u64,
    n_mc: usize,
    n_pixels: usize,
    n_labels: usize,
    values: Vec<f64>,
}

impl PredictionStack {
    pub fn new(sample_id: u64, n_mc: usize, n_pixels: usize, n_labels: usize, values: Vec<f64>) -> Result<Self> {
        ensure!(
            n_mc >= 1 && n_pixels >= 1 && n_labels >= 1,
            Shape,
            "stack dimensions must be positive: {n_mc}x{n_pixels}x{n_labels}"
        );
        ensure!(
            values.len() == n_mc * n_pixels * n_labels,
            Shape,
            "stack {n_mc}x{n_pixels}x{n_labels} needs {} values, got {}",
            n_mc * n_pixels * n_labels,
            values.len()
        );
        ensure!(
            values.iter().all(|v| (0.0..=1.0).contains(v)),
            Data,
            "prediction stack for sample {sample_id} has values outside [0, 1]"
        );
        Ok(Self {
            sample_id,
            n_mc,
            n_pixels,
            n_labels,
            values,
        })
    }

    pub fn sample_id(&self) -> u64 {
        self.sample_id
    }

    pub fn n_mc(&self) -> usize {
        self.n_mc
    }

    pub fn n_pixels(&self) -> usize {
        self.n_pixels
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn get(&self, mc: usize, pixel: usize, label: usize) -> f64 {
        self.values[(mc * self.n_pixels + pixel) * self.n_labels + label]
    }

    /// Replaces each draw's per-pixel probabilities with a one-hot argmax
    /// (lowest label wins ties).
    pub fn binarized(&self) -> PredictionStack {
        let mut values = vec![0.0; self.values.len()];
        for (src, dst) in self
            .values
            .chunks_exact(self.n_labels)
            .zip(values.chunks_exact_mut(self.n_labels))
        {
            let best = (0..self.n_labels)
                .fold(0, |best, l| if src[l] > src[best] { l } else { best });
            dst[best] = 1.0;
        }
        PredictionStack {
            values,
            ..self.clone()
        }
    }

    /// Mean over draws of the per-pixel label distribution.
    pub fn mean_prediction(&self, pixel: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_labels];
        for mc in 0..self.n_mc {
            for (l, o) in out.iter_mut().enumerate() {
                *o += self.get(mc, pixel, l);
            }
        }
        out.iter_mut().for_each(|v| *v /= self.n_mc as f64);
        out
    }
}

/// Spatial mean of the per-pixel population variance across MC draws for
/// one label. Lies in `[0, 0.25]` for probability-valued stacks.
pub fn label_uncertainty(stack: &PredictionStack, label: usize) -> Result<f64> {
    ensure!(
        stack.n_mc >= 2,
        Config,
        "uncertainty needs at least 2 MC draws, stack has {}",
        stack.n_mc
    );
    ensure!(
        label < stack.n_labels,
        Config,
        "label {label} out of range for {} labels",
        stack.n_labels
    );
    let n_mc = stack.n_mc as f64;
    let mut total = 0.0;
    let mut draws = Vec::with_capacity(stack.n_mc);
    for pixel in 0..stack.n_pixels {
        // Sorted and shifted by the minimum: the result is independent of
        // draw order and exactly zero when all draws agree.
        draws.clear();
        draws.extend((0..stack.n_mc).map(|m| stack.get(m, pixel, label)));
        draws.sort_by(f64::total_cmp);
        let lo = draws[0];
        let mean = draws.iter().map(|v| v - lo).sum::<f64>() / n_mc;
        let var = draws.iter().map(|v| (v - lo - mean).powi(2)).sum::<f64>() / n_mc;
        total += var;
    }
    Ok(total / stack.n_pixels as f64)
}

/// Mean of per-label uncertainties.
pub fn multiclass_uncertainty(per_label: &[f64]) -> Result<f64> {
    ensure!(!per_label.is_empty(), Config, "no per-label uncertainties given");
    Ok(per_label.iter().sum::<f64>() / per_label.len() as f64)
}

/// Uncertainty of a whole stack: the mean over labels of
/// [`label_uncertainty`].
pub fn stack_uncertainty(stack: &PredictionStack) -> Result<f64> {
    let per_label = (0..stack.n_labels)
        .map(|l| label_uncertainty(stack, l))
        .collect::<Result<Vec<_>>>()?;
    multiclass_uncertainty(&per_label)
}

/// Indices of the `k` largest scores by descending score, ties broken by
/// ascending index. Returns everything when `k` exceeds the input.
pub fn top_k_uncertain(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Feature vector used by the set-cover baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct Descriptor {
    pub sample_id: u64,
    pub values: Vec<f64>,
}

impl Descriptor {
    pub fn new(sample_id: u64, values: Vec<f64>) -> Result<Self> {
        ensure!(!values.is_empty(), Shape, "descriptor needs at least one entry");
        ensure!(
            values.iter().all(|v| v.is_finite()),
            Data,
            "descriptor for sample {sample_id} is not finite"
        );
        Ok(Self { sample_id, values })
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Global average pooling over an `H x W x C` activation map laid out
/// channel-fastest.
pub fn image_descriptor(sample_id: u64, features: &[f64], h: usize, w: usize, c: usize) -> Result<Descriptor> {
    ensure!(h >= 1 && w >= 1 && c >= 1, Shape, "feature map dims must be positive");
    ensure!(
        features.len() == h * w * c,
        Shape,
        "{h}x{w}x{c} map needs {} values, got {}",
        h * w * c,
        features.len()
    );
    let mut sums = vec![0.0; c];
    for px in features.chunks_exact(c) {
        for (s, v) in sums.iter_mut().zip(px) {
            *s += v;
        }
    }
    let n = (h * w) as f64;
    Descriptor::new(sample_id, sums.into_iter().map(|s| s / n).collect())
}

pub fn cosine_sim(a: &Descriptor, b: &Descriptor) -> Result<f64> {
    ensure!(
        a.values.len() == b.values.len(),
        Shape,
        "descriptor lengths differ: {} vs {}",
        a.values.len(),
        b.values.len()
    );
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Numeric("cosine similarity of a zero-norm descriptor".into()));
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Greedy maximum set cover over cosine similarity.
///
/// Repeatedly adds the candidate `j` maximizing
/// `sum_i max(sim(u_i, c_j), max_{s in S} sim(u_i, s))` over the universe
/// `u`. Returns candidate positions in selection order; ties go to the lower
/// position.
pub fn greedy_set_cover(candidates: &[Descriptor], universe: &[Descriptor], n_rep: usize) -> Result<Vec<usize>> {
    ensure!(!candidates.is_empty(), Config, "set cover needs at least one candidate");
    ensure!(!universe.is_empty(), Config, "set cover needs a non-empty universe");
    let sims: Vec<Vec<f64>> = candidates
        .par_iter()
        .map(|c| universe.iter().map(|u| cosine_sim(u, c)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let n_rep = n_rep.min(candidates.len());
    let mut cover = vec![f64::NEG_INFINITY; universe.len()];
    let mut taken = vec![false; candidates.len()];
    let mut picked = Vec::with_capacity(n_rep);
    for _ in 0..n_rep {
        let gains: Vec<Option<f64>> = sims
            .par_iter()
            .enumerate()
            .map(|(j, row)| {
                (!taken[j]).then(|| row.iter().zip(&cover).map(|(s, c)| s.max(*c)).sum())
            })
            .collect();
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in gains.into_iter().enumerate() {
            if let Some(g) = g {
                if best.is_none_or(|(_, bg)| g > bg) {
                    best = Some((j, g));
                }
            }
        }
        let (j, _) = best.expect("n_rep clamped to candidate count");
        taken[j] = true;
        for (c, s) in cover.iter_mut().zip(&sims[j]) {
            *c = c.max(*s);
        }
        picked.push(j);
    }
    Ok(picked)
}

/// Set-cover objective `F(S) = sum_i max_{s in S} sim(u_i, s)`.
pub fn set_cover_objective(selected: &[&Descriptor], universe: &[Descriptor]) -> Result<f64> {
    let mut total = 0.0;
    for u in universe {
        let mut best = f64::NEG_INFINITY;
        for s in selected {
            best = best.max(cosine_sim(u, s)?);
        }
        total += best;
    }
    Ok(total)
}

/// Reads stacks from `sample_id,mc_index,pixel_index,label,probability`
/// rows. Every `(mc, pixel, label)` cell of every sample must be present.
pub fn read_prediction_stacks_from<R: Read>(reader: R) -> Result<Vec<PredictionStack>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let expected = ["sample_id", "mc_index", "pixel_index", "label", "probability"];
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    ensure!(
        header == expected,
        Format,
        "prediction stack header must be {expected:?}, got {header:?}"
    );
    let mut cells: BTreeMap<u64, Vec<(usize, usize, usize, f64)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let parse_u = |k: usize| -> Result<usize> {
            rec[k]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {line}: bad integer `{}`", &rec[k])))
        };
        let id: u64 = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: bad sample id `{}`", &rec[0])))?;
        let p: f64 = rec[4]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: bad probability `{}`", &rec[4])))?;
        cells
            .entry(id)
            .or_default()
            .push((parse_u(1)?, parse_u(2)?, parse_u(3)?, p));
    }
    cells
        .into_iter()
        .map(|(id, entries)| {
            let n_mc = entries.iter().map(|e| e.0).max().unwrap_or(0) + 1;
            let n_px = entries.iter().map(|e| e.1).max().unwrap_or(0) + 1;
            let n_l = entries.iter().map(|e| e.2).max().unwrap_or(0) + 1;
            let mut values = vec![f64::NAN; n_mc * n_px * n_l];
            for (m, px, l, p) in entries {
                let slot = &mut values[(m * n_px + px) * n_l + l];
                ensure!(slot.is_nan(), Format, "sample {id}: duplicate cell ({m},{px},{l})");
                *slot = p;
            }
            ensure!(
                values.iter().all(|v| !v.is_nan()),
                Format,
                "sample {id}: stack is missing cells"
            );
            PredictionStack::new(id, n_mc, n_px, n_l, values)
        })
        .collect()
}

pub fn read_prediction_stacks(path: impl AsRef<Path>) -> Result<Vec<PredictionStack>> {
    read_prediction_stacks_from(File::open(path)?)
}

pub fn write_prediction_stacks_to<W: Write>(writer: W, stacks: &[PredictionStack]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["sample_id", "mc_index", "pixel_index", "label", "probability"])?;
    for s in stacks {
        for m in 0..s.n_mc {
            for px in 0..s.n_pixels {
                for l in 0..s.n_labels {
                    wtr.write_record([
                        s.sample_id.to_string(),
                        m.to_string(),
                        px.to_string(),
                        l.to_string(),
                        format!("{}", s.get(m, px, l)),
                    ])?;
                }
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_prediction_stacks(path: impl AsRef<Path>, stacks: &[PredictionStack]) -> Result<()> {
    write_prediction_stacks_to(File::create(path)?, stacks)
}

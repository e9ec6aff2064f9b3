//! Segmentation and selection-quality metrics: Dice overlap, mean surface
//! distance over erosion contours, and class-proportion entropy.

use std::collections::BTreeMap;

use crate::error::{ensure, Error, Result};
use crate::ingest::RawTensor;

pub type Dims = (usize, usize, usize);

/// Boolean volume of shape `(depth, height, width)`, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    dims: Dims,
    voxels: Vec<bool>,
}

impl BinaryMask {
    pub fn new(dims: Dims, voxels: Vec<bool>) -> Result<Self> {
        ensure!(
            dims.0 >= 1 && dims.1 >= 1 && dims.2 >= 1,
            Shape,
            "mask dims must be positive: {dims:?}"
        );
        ensure!(
            dims.0 * dims.1 * dims.2 == voxels.len(),
            Shape,
            "mask dims {dims:?} do not match {} voxels",
            voxels.len()
        );
        Ok(Self { dims, voxels })
    }

    pub fn empty(dims: Dims) -> Result<Self> {
        Self::new(dims, vec![false; dims.0 * dims.1 * dims.2])
    }

    /// Mask of the voxels whose label equals `label`.
    pub fn from_labels(dims: Dims, labels: &[u32], label: u32) -> Result<Self> {
        Self::new(dims, labels.iter().map(|&l| l == label).collect())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn voxels(&self) -> &[bool] {
        &self.voxels
    }

    pub fn count(&self) -> usize {
        self.voxels.iter().filter(|&&v| v).count()
    }

    fn offset(&self, z: usize, y: usize, x: usize) -> usize {
        (z * self.dims.1 + y) * self.dims.2 + x
    }

    pub fn get(&self, z: usize, y: usize, x: usize) -> bool {
        self.voxels[self.offset(z, y, x)]
    }

    pub fn set(&mut self, z: usize, y: usize, x: usize, value: bool) {
        let o = self.offset(z, y, x);
        self.voxels[o] = value;
    }

    /// Reads a 0/1 IDX tensor with 2 (`H x W`) or 3 (`D x H x W`) dims.
    pub fn from_idx(tensor: &RawTensor) -> Result<Self> {
        let dims = match *tensor.dims() {
            [h, w] => (1, h, w),
            [d, h, w] => (d, h, w),
            ref other => {
                return Err(Error::Format(format!("mask tensors need 2 or 3 dims, got {other:?}")))
            }
        };
        ensure!(
            tensor.data().iter().all(|&b| b <= 1),
            Format,
            "mask payload must be 0/1"
        );
        Self::new(dims, tensor.data().iter().map(|&b| b == 1).collect())
    }

    pub fn to_idx(&self) -> RawTensor {
        RawTensor::new(
            vec![self.dims.0, self.dims.1, self.dims.2],
            self.voxels.iter().map(|&v| u8::from(v)).collect(),
        )
        .expect("mask dims are positive")
    }
}

/// Surface voxels of a mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContourSet {
    dims: Dims,
    points: Vec<[usize; 3]>,
}

impl ContourSet {
    pub fn new(dims: Dims, mut points: Vec<[usize; 3]>) -> Result<Self> {
        ensure!(
            points.iter().all(|p| p[0] < dims.0 && p[1] < dims.1 && p[2] < dims.2),
            Shape,
            "contour point outside {dims:?}"
        );
        points.sort_unstable();
        points.dedup();
        Ok(Self { dims, points })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn points(&self) -> &[[usize; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Dice overlap `2|S & G| / (|S| + |G|)`. `None` when both masks are
/// empty.
pub fn dice(m_s: &BinaryMask, m_g: &BinaryMask) -> Result<Option<f64>> {
    ensure!(
        m_s.dims == m_g.dims,
        Shape,
        "mask dims differ: {:?} vs {:?}",
        m_s.dims,
        m_g.dims
    );
    let (mut inter, mut s, mut g) = (0usize, 0usize, 0usize);
    for (&a, &b) in m_s.voxels.iter().zip(&m_g.voxels) {
        s += usize::from(a);
        g += usize::from(b);
        inter += usize::from(a && b);
    }
    if s + g == 0 {
        return Ok(None);
    }
    Ok(Some(2.0 * inter as f64 / (s + g) as f64))
}

/// Mask minus its erosion by the full 3x3x3 structuring element. Voxels
/// outside the volume count as background.
pub fn extract_contour(mask: &BinaryMask) -> ContourSet {
    let (d, h, w) = mask.dims;
    let mut points = Vec::new();
    for z in 0..d {
        for y in 0..h {
            for x in 0..w {
                if mask.get(z, y, x) && !interior(mask, z, y, x) {
                    points.push([z, y, x]);
                }
            }
        }
    }
    ContourSet {
        dims: mask.dims,
        points,
    }
}

fn interior(mask: &BinaryMask, z: usize, y: usize, x: usize) -> bool {
    let (d, h, w) = mask.dims;
    if z == 0 || y == 0 || x == 0 || z + 1 >= d || y + 1 >= h || x + 1 >= w {
        return false;
    }
    for zz in z - 1..=z + 1 {
        for yy in y - 1..=y + 1 {
            for xx in x - 1..=x + 1 {
                if !mask.get(zz, yy, xx) {
                    return false;
                }
            }
        }
    }
    true
}

/// One pass of the lower-envelope squared distance transform along a line.
/// `f` holds squared distances (or infinity) and is overwritten.
fn edt_line(f: &mut [f64], spacing: f64, v: &mut Vec<usize>, zs: &mut Vec<f64>, out: &mut Vec<f64>) {
    let n = f.len();
    let s2 = spacing * spacing;
    let pos = |q: usize| q as f64;
    v.clear();
    zs.clear();
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let Some(&last) = v.last() else {
                v.push(q);
                zs.push(f64::NEG_INFINITY);
                break;
            };
            let sep = ((f[q] + s2 * pos(q) * pos(q)) - (f[last] + s2 * pos(last) * pos(last)))
                / (2.0 * s2 * (pos(q) - pos(last)));
            if sep <= *zs.last().expect("parallel to v") {
                v.pop();
                zs.pop();
            } else {
                v.push(q);
                zs.push(sep);
                break;
            }
        }
    }
    if v.is_empty() {
        return;
    }
    out.clear();
    let mut k = 0;
    for p in 0..n {
        while k + 1 < v.len() && zs[k + 1] < pos(p) {
            k += 1;
        }
        let dq = pos(p) - pos(v[k]);
        out.push(s2 * dq * dq + f[v[k]]);
    }
    f.copy_from_slice(out);
}

/// Squared Euclidean distance from every voxel to the nearest contour
/// point, via separable exact distance transforms.
fn squared_distance_field(c: &ContourSet, spacing: [f64; 3]) -> Vec<f64> {
    let (d, h, w) = c.dims;
    let mut field = vec![f64::INFINITY; d * h * w];
    for p in &c.points {
        field[(p[0] * h + p[1]) * w + p[2]] = 0.0;
    }
    let (mut v, mut zs, mut out) = (Vec::new(), Vec::new(), Vec::new());
    let mut line = Vec::new();
    // x axis: contiguous lines
    for chunk in field.chunks_exact_mut(w) {
        edt_line(chunk, spacing[2], &mut v, &mut zs, &mut out);
    }
    // y axis
    for z in 0..d {
        for x in 0..w {
            line.clear();
            line.extend((0..h).map(|y| field[(z * h + y) * w + x]));
            edt_line(&mut line, spacing[1], &mut v, &mut zs, &mut out);
            for (y, val) in line.iter().enumerate() {
                field[(z * h + y) * w + x] = *val;
            }
        }
    }
    // z axis
    for y in 0..h {
        for x in 0..w {
            line.clear();
            line.extend((0..d).map(|z| field[(z * h + y) * w + x]));
            edt_line(&mut line, spacing[0], &mut v, &mut zs, &mut out);
            for (z, val) in line.iter().enumerate() {
                field[(z * h + y) * w + x] = *val;
            }
        }
    }
    field
}

/// Symmetric mean surface distance in voxel units.
pub fn msd(c_s: &ContourSet, c_g: &ContourSet) -> Result<f64> {
    msd_with_spacing(c_s, c_g, [1.0; 3])
}

/// Symmetric mean surface distance with a physical voxel spacing
/// `(depth, height, width)`.
pub fn msd_with_spacing(c_s: &ContourSet, c_g: &ContourSet, spacing: [f64; 3]) -> Result<f64> {
    ensure!(
        c_s.dims == c_g.dims,
        Shape,
        "contour dims differ: {:?} vs {:?}",
        c_s.dims,
        c_g.dims
    );
    ensure!(
        spacing.iter().all(|s| *s > 0.0 && s.is_finite()),
        Config,
        "voxel spacing must be positive"
    );
    if c_s.is_empty() || c_g.is_empty() {
        return Err(Error::UndefinedDistance(
            "surface distance to an empty contour".into(),
        ));
    }
    let (_, h, w) = c_s.dims;
    let sum_to = |from: &ContourSet, to: &ContourSet| -> f64 {
        let field = squared_distance_field(to, spacing);
        from.points
            .iter()
            .map(|p| field[(p[0] * h + p[1]) * w + p[2]].sqrt())
            .sum()
    };
    let total = sum_to(c_s, c_g) + sum_to(c_g, c_s);
    Ok(total / (c_s.len() + c_g.len()) as f64)
}

/// Natural-log entropy of the empirical class proportions.
pub fn class_entropy(labels: &[u32]) -> Result<f64> {
    ensure!(!labels.is_empty(), Config, "entropy of an empty label multiset");
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let n = labels.len() as f64;
    Ok(-counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>())
}

/// [`class_entropy`] reported in another logarithm base (2 for bits).
pub fn class_entropy_base(labels: &[u32], base: f64) -> Result<f64> {
    ensure!(base > 1.0 && base.is_finite(), Config, "log base must exceed 1");
    Ok(class_entropy(labels)? / base.ln())
}

/// Equal-weight mean of the defined per-label scores.
pub fn mean_defined(scores: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = scores.iter().flatten().copied().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Per-label Dice between two label volumes, averaged with equal weights
/// over labels that occur in either volume.
pub fn mean_label_dice(dims: Dims, predicted: &[u32], truth: &[u32], n_labels: u32) -> Result<Option<f64>> {
    let scores = (0..n_labels)
        .map(|l| dice(&BinaryMask::from_labels(dims, predicted, l)?, &BinaryMask::from_labels(dims, truth, l)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_defined(&scores))
}

//! Pool data model: the embedding matrix, the annotated / non-annotated
//! partition, group (volume) structure, and group-respecting holdout splits.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::seed;

/// Dense row-major matrix of reals.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        ensure!(
            rows.checked_mul(cols) == Some(data.len()),
            Shape,
            "{rows}x{cols} matrix needs {} values, got {}",
            rows * cols,
            data.len()
        );
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row vectors; all rows must share one length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            ensure!(
                r.len() == cols,
                Shape,
                "row {i} has {} columns, expected {cols}",
                r.len()
            );
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Copies the given rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Applies `f(column, value)` to every entry.
    pub fn map_columns(&self, f: impl Fn(usize, f64) -> f64) -> Matrix {
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(k, &v)| f(k % self.cols, v))
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

/// Immutable pool of samples: one embedding row per sample, plus optional
/// class labels and group (volume) ids.
#[derive(Clone, Debug)]
pub struct SamplePool {
    embeddings: Matrix,
    labels: Option<Vec<u32>>,
    groups: Option<Vec<u32>>,
    sample_ids: Vec<u64>,
    id_index: HashMap<u64, usize>,
    group_members: BTreeMap<u32, Vec<usize>>,
}

/// Creates a pool with stable ids `0..n`.
pub fn create_pool(
    embeddings: Matrix,
    labels: Option<Vec<u32>>,
    groups: Option<Vec<u32>>,
) -> Result<SamplePool> {
    let ids = (0..embeddings.rows() as u64).collect();
    SamplePool::with_ids(embeddings, labels, groups, ids)
}

impl SamplePool {
    pub fn with_ids(
        embeddings: Matrix,
        labels: Option<Vec<u32>>,
        groups: Option<Vec<u32>>,
        sample_ids: Vec<u64>,
    ) -> Result<Self> {
        let n = embeddings.rows();
        ensure!(embeddings.cols() >= 1, Shape, "embeddings need at least one column");
        if let Some((k, _)) = embeddings
            .as_slice()
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite())
        {
            return Err(Error::Data(format!(
                "non-finite embedding at row {}, column {}",
                k / embeddings.cols(),
                k % embeddings.cols()
            )));
        }
        if let Some(l) = &labels {
            ensure!(l.len() == n, Shape, "{} labels for {n} samples", l.len());
        }
        if let Some(g) = &groups {
            ensure!(g.len() == n, Shape, "{} group ids for {n} samples", g.len());
        }
        ensure!(sample_ids.len() == n, Shape, "{} ids for {n} samples", sample_ids.len());

        let mut id_index = HashMap::with_capacity(n);
        for (i, &id) in sample_ids.iter().enumerate() {
            if id_index.insert(id, i).is_some() {
                return Err(Error::Data(format!("duplicate sample id {id}")));
            }
        }
        let mut group_members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        if let Some(g) = &groups {
            for (i, &gid) in g.iter().enumerate() {
                group_members.entry(gid).or_default().push(i);
            }
        }
        Ok(Self {
            embeddings,
            labels,
            groups,
            sample_ids,
            id_index,
            group_members,
        })
    }

    pub fn len(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_lat(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }

    pub fn embedding(&self, index: usize) -> &[f64] {
        self.embeddings.row(index)
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn groups(&self) -> Option<&[u32]> {
        self.groups.as_deref()
    }

    pub fn sample_ids(&self) -> &[u64] {
        &self.sample_ids
    }

    pub fn id(&self, index: usize) -> u64 {
        self.sample_ids[index]
    }

    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.id_index.get(&id).copied()
    }

    /// Maps external ids to dense indices.
    pub fn indices_of(&self, ids: &[u64]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|&id| {
                self.index_of(id)
                    .ok_or_else(|| Error::Data(format!("unknown sample id {id}")))
            })
            .collect()
    }

    /// Members of each group, keyed by group id in ascending order. Empty
    /// when the pool carries no groups.
    pub fn group_members(&self) -> &BTreeMap<u32, Vec<usize>> {
        &self.group_members
    }

    /// Number of classes implied by the labels (largest label + 1).
    pub fn n_classes(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().max())
            .map_or(0, |&m| m as usize + 1)
    }

    /// A new pool holding only `indices`, keeping their external ids.
    pub fn subset(&self, indices: &[usize]) -> Result<SamplePool> {
        let pick = |v: &Vec<u32>| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        SamplePool::with_ids(
            self.embeddings.select_rows(indices),
            self.labels.as_ref().map(pick),
            self.groups.as_ref().map(pick),
            indices.iter().map(|&i| self.sample_ids[i]).collect(),
        )
    }

    /// Same samples, labels and groups with a different embedding matrix
    /// (e.g. after encoding).
    pub fn with_embeddings(&self, embeddings: Matrix) -> Result<SamplePool> {
        ensure!(
            embeddings.rows() == self.len(),
            Shape,
            "replacement embeddings have {} rows, pool has {}",
            embeddings.rows(),
            self.len()
        );
        SamplePool::with_ids(
            embeddings,
            self.labels.clone(),
            self.groups.clone(),
            self.sample_ids.clone(),
        )
    }
}

/// Partition of pool indices into annotated and non-annotated sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotationState {
    annotated: Vec<usize>,
    is_annotated: Vec<bool>,
    iteration: usize,
}

impl AnnotationState {
    /// Starts at iteration 0 with `initial` already annotated.
    pub fn new(pool_size: usize, initial: &[usize]) -> Result<Self> {
        let mut state = Self {
            annotated: Vec::with_capacity(initial.len()),
            is_annotated: vec![false; pool_size],
            iteration: 0,
        };
        state.insert_all(initial)?;
        Ok(state)
    }

    fn insert_all(&mut self, batch: &[usize]) -> Result<()> {
        let mut seen = HashSet::with_capacity(batch.len());
        for &i in batch {
            ensure!(
                i < self.is_annotated.len(),
                State,
                "index {i} outside pool of {}",
                self.is_annotated.len()
            );
            ensure!(!self.is_annotated[i], State, "index {i} is already annotated");
            ensure!(seen.insert(i), State, "index {i} appears twice in one batch");
        }
        for &i in batch {
            self.is_annotated[i] = true;
            self.annotated.push(i);
        }
        Ok(())
    }

    /// Appends `batch` to the annotated set and advances the iteration.
    /// The state is left untouched when the batch is rejected.
    pub fn annotate(&self, batch: &[usize]) -> Result<AnnotationState> {
        let mut next = self.clone();
        next.insert_all(batch)?;
        next.iteration += 1;
        debug_assert!(next.check_invariants().is_ok());
        Ok(next)
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Annotated indices in annotation order.
    pub fn annotated(&self) -> &[usize] {
        &self.annotated
    }

    /// Non-annotated indices, ascending.
    pub fn non_annotated(&self) -> Vec<usize> {
        self.is_annotated
            .iter()
            .enumerate()
            .filter(|(_, &a)| !a)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn n_annotated(&self) -> usize {
        self.annotated.len()
    }

    pub fn n_non_annotated(&self) -> usize {
        self.is_annotated.len() - self.annotated.len()
    }

    pub fn pool_size(&self) -> usize {
        self.is_annotated.len()
    }

    pub fn is_annotated(&self, index: usize) -> bool {
        self.is_annotated[index]
    }

    /// Verifies that the two sets are disjoint and cover the pool.
    pub fn check_invariants(&self) -> Result<()> {
        let mut seen = vec![false; self.is_annotated.len()];
        for &i in &self.annotated {
            ensure!(
                i < seen.len() && !seen[i],
                State,
                "annotated index {i} duplicated or out of range"
            );
            seen[i] = true;
        }
        ensure!(
            seen == self.is_annotated,
            State,
            "annotated list and membership mask disagree"
        );
        let union = self.n_annotated() + self.non_annotated().len();
        ensure!(union == self.pool_size(), State, "partition does not cover the pool");
        Ok(())
    }
}

/// Disjoint pool / validation / test id sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoldoutSplit {
    pub pool_ids: Vec<u64>,
    pub validation_ids: Vec<u64>,
    pub test_ids: Vec<u64>,
    pub seed: u64,
}

/// Largest-remainder apportionment of `total` units over `ratios`.
/// Remainder ties go to the earlier ratio.
pub(crate) fn largest_remainder(total: usize, ratios: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = ratios.iter().map(|r| r * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(total.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

/// Splits the pool into pool / validation / test sets. When the pool has
/// groups, whole groups are assigned; otherwise every sample is its own unit.
pub fn split_holdout(pool: &SamplePool, ratios: (f64, f64, f64), seed: u64) -> Result<HoldoutSplit> {
    let r = [ratios.0, ratios.1, ratios.2];
    ensure!(
        r.iter().all(|&x| x > 0.0 && x.is_finite()),
        Config,
        "split ratios must be positive, got {r:?}"
    );
    ensure!(
        (r.iter().sum::<f64>() - 1.0).abs() <= 1e-9,
        Config,
        "split ratios must sum to 1, got {}",
        r.iter().sum::<f64>()
    );

    let mut units: Vec<Vec<usize>> = if pool.groups().is_some() {
        pool.group_members().values().cloned().collect()
    } else {
        (0..pool.len()).map(|i| vec![i]).collect()
    };
    ensure!(
        units.len() >= r.len(),
        Config,
        "{} splits requested but only {} groups available",
        r.len(),
        units.len()
    );

    let mut rng = seed::rng_from(seed::derive_seed(seed, "holdout"));
    units.shuffle(&mut rng);
    let counts = largest_remainder(units.len(), &r);

    let mut sets: [Vec<u64>; 3] = Default::default();
    let mut cursor = 0;
    for (k, &c) in counts.iter().enumerate() {
        for unit in &units[cursor..cursor + c] {
            sets[k].extend(unit.iter().map(|&i| pool.id(i)));
        }
        cursor += c;
    }
    for s in &mut sets {
        s.sort_unstable();
    }
    let [pool_ids, validation_ids, test_ids] = sets;
    Ok(HoldoutSplit {
        pool_ids,
        validation_ids,
        test_ids,
        seed,
    })
}

/// Draws `n` distinct samples with probability proportional to the prior of
/// each sample's class (weighted sampling without replacement). Returned
/// indices are in draw order.
pub fn draw_initial(pool: &SamplePool, class_priors: &[f64], n: usize, seed: u64) -> Result<Vec<usize>> {
    let labels = pool
        .labels()
        .ok_or_else(|| Error::Config("class-weighted draws need labels".into()))?;
    ensure!(
        class_priors.iter().all(|p| *p >= 0.0 && p.is_finite()),
        Config,
        "class priors must be non-negative"
    );
    ensure!(
        class_priors.iter().sum::<f64>() > 0.0,
        Config,
        "class priors sum to zero"
    );
    let mut rng = seed::rng_from(seed::derive_seed(seed, "initial-draw"));
    // Efraimidis-Spirakis keys: ln(u) / w, keep the n largest.
    let mut keyed: Vec<(f64, usize)> = Vec::with_capacity(labels.len());
    for (i, &c) in labels.iter().enumerate() {
        let u: f64 = rng.random::<f64>();
        let w = class_priors.get(c as usize).copied().unwrap_or(0.0);
        if w > 0.0 {
            keyed.push(((1.0 - u).ln() / w, i));
        }
    }
    ensure!(
        keyed.len() >= n,
        Config,
        "only {} samples have non-zero prior, {n} requested",
        keyed.len()
    );
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(keyed.into_iter().take(n).map(|(_, i)| i).collect())
}

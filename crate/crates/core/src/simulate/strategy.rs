use std::collections::BTreeMap;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::proxy::ProxyConfig;
use crate::bsq::{
    fit_diag_gaussian_rows, score_candidates, Aggregation, BsqMode, DiagGaussian, Kernel,
};
use crate::error::{ensure, Error, Result};
use crate::pool::{AnnotationState, Matrix, SamplePool};
use crate::scoring::{greedy_set_cover, top_k_uncertain, Descriptor};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Random,
    Uncertainty,
    Setcover,
    Bsq,
    Upperbound,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::Uncertainty => "uncertainty",
            StrategyKind::Setcover => "setcover",
            StrategyKind::Bsq => "bsq",
            StrategyKind::Upperbound => "upperbound",
        }
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random" => StrategyKind::Random,
            "uncertainty" => StrategyKind::Uncertainty,
            "setcover" => StrategyKind::Setcover,
            "bsq" => StrategyKind::Bsq,
            "upperbound" => StrategyKind::Upperbound,
            other => return Err(Error::Config(format!("unknown strategy `{other}`"))),
        })
    }
}

/// Whether queries pick individual samples (slices) or whole groups
/// (volumes).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    #[default]
    Sample,
    Group,
}

/// Reduction used to turn member scores into a group score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduce {
    #[default]
    Mean,
    Max,
    Sum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// Size of the most-uncertain candidate set. `None` skips the
    /// uncertainty stage and uses every non-annotated sample.
    pub n_unc: Option<usize>,
    pub n_rep: usize,
    pub mode: QueryMode,
    pub bsq_mode: BsqMode,
    pub aggregation: Aggregation,
    pub group_reduce: Reduce,
    pub kernel: Kernel,
    pub proxy: ProxyConfig,
    /// Binarize prediction stacks (argmax per draw) before measuring
    /// variance.
    pub binarize: bool,
    /// Log MMD between the annotated set and the pool each iteration.
    pub log_mmd: bool,
    pub seed: u64,
}

impl StrategyConfig {
    /// Slice-mode defaults: 64 uncertain candidates, 32 queries.
    pub fn sample_defaults(kind: StrategyKind, seed: u64) -> Self {
        Self {
            kind,
            n_unc: Some(64),
            n_rep: 32,
            mode: QueryMode::Sample,
            bsq_mode: BsqMode::OneShot,
            aggregation: Aggregation::PerDimension,
            group_reduce: Reduce::Mean,
            kernel: Kernel::default(),
            proxy: ProxyConfig::default(),
            binarize: false,
            log_mmd: true,
            seed,
        }
    }

    /// Volume-mode defaults: 2 uncertain groups, 1 queried group.
    pub fn group_defaults(kind: StrategyKind, seed: u64) -> Self {
        Self {
            n_unc: Some(2),
            n_rep: 1,
            mode: QueryMode::Group,
            ..Self::sample_defaults(kind, seed)
        }
    }

    /// Whether this configuration ranks candidates by model uncertainty.
    pub fn needs_uncertainty(&self) -> bool {
        match self.kind {
            StrategyKind::Uncertainty => true,
            StrategyKind::Setcover | StrategyKind::Bsq => self.n_unc.is_some(),
            StrategyKind::Random | StrategyKind::Upperbound => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_rep >= 1, Config, "n_rep must be at least 1");
        if let Some(n_unc) = self.n_unc {
            ensure!(n_unc >= 1, Config, "n_unc must be at least 1");
            if matches!(self.kind, StrategyKind::Setcover | StrategyKind::Bsq) {
                ensure!(
                    self.n_rep <= n_unc,
                    Config,
                    "n_rep={} exceeds n_unc={n_unc}",
                    self.n_rep
                );
            }
        }
        if self.needs_uncertainty() {
            ensure!(
                self.proxy.n_models >= 2,
                Config,
                "uncertainty needs at least 2 bootstrap models"
            );
            ensure!(self.proxy.k >= 1, Config, "proxy k must be at least 1");
        }
        Ok(())
    }
}

/// Per-sample signals a strategy may consume.
#[derive(Clone, Debug, Default)]
pub struct LearnerOutputs {
    /// Uncertainty per pool index; only non-annotated entries are read.
    pub uncertainty: Option<Vec<f64>>,
    /// Descriptors for the set-cover baseline, one row per pool index.
    /// Falls back to the pool embeddings.
    pub descriptors: Option<Matrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub index: usize,
    pub score: f64,
}

/// Samples chosen at one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryBatch {
    pub iteration: usize,
    /// Pool indices in query order; whole groups in group mode.
    pub selected: Vec<usize>,
    /// Scores of the candidates considered in the final stage (sample or
    /// group representatives, depending on the mode).
    pub scores: Vec<CandidateScore>,
}

/// Combines per-sample scores into per-group scores. Groups come back in
/// ascending id order.
pub fn group_aggregate(scores: &[f64], groups: Option<&[u32]>, reduce: Reduce) -> Result<Vec<(u32, f64)>> {
    let groups = groups.ok_or_else(|| Error::Config("group aggregation needs group ids".into()))?;
    ensure!(
        groups.len() == scores.len(),
        Shape,
        "{} group ids for {} scores",
        groups.len(),
        scores.len()
    );
    let mut members: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for (&g, &s) in groups.iter().zip(scores) {
        members.entry(g).or_default().push(s);
    }
    Ok(members
        .into_iter()
        .map(|(g, v)| (g, reduce_scores(&v, reduce)))
        .collect())
}

fn reduce_scores(values: &[f64], reduce: Reduce) -> f64 {
    match reduce {
        Reduce::Mean => values.iter().sum::<f64>() / values.len() as f64,
        Reduce::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Reduce::Sum => values.iter().sum(),
    }
}

/// A unit that can be queried: a single sample, or every member of a group.
#[derive(Clone, Debug)]
struct Unit {
    members: Vec<usize>,
}

fn query_units(strategy: &StrategyConfig, pool: &SamplePool, state: &AnnotationState) -> Result<Vec<Unit>> {
    match strategy.mode {
        QueryMode::Sample => Ok(state
            .non_annotated()
            .into_iter()
            .map(|i| Unit { members: vec![i] })
            .collect()),
        QueryMode::Group => {
            ensure!(
                pool.groups().is_some(),
                Config,
                "group-mode querying needs group ids"
            );
            Ok(pool
                .group_members()
                .values()
                .filter(|m| m.iter().all(|&i| !state.is_annotated(i)))
                .map(|m| Unit { members: m.clone() })
                .collect())
        }
    }
}

fn unit_score(unit: &Unit, per_sample: &[f64], reduce: Reduce) -> f64 {
    let v: Vec<f64> = unit.members.iter().map(|&i| per_sample[i]).collect();
    reduce_scores(&v, reduce)
}

/// Indices (into `units`) of the uncertainty-ranked candidates, or all units
/// when the uncertainty stage is off.
fn uncertain_units(
    strategy: &StrategyConfig,
    units: &[Unit],
    outputs: &LearnerOutputs,
    k: Option<usize>,
) -> Result<(Vec<usize>, Vec<CandidateScore>)> {
    let Some(k) = k else {
        return Ok(((0..units.len()).collect(), Vec::new()));
    };
    let unc = outputs.uncertainty.as_ref().ok_or_else(|| {
        Error::Config(format!(
            "strategy `{}` needs uncertainty scores but none were provided",
            strategy.kind.name()
        ))
    })?;
    let scores: Vec<f64> = units
        .iter()
        .map(|u| unit_score(u, unc, strategy.group_reduce))
        .collect();
    let picked = top_k_uncertain(&scores, k);
    let diag = picked
        .iter()
        .map(|&u| CandidateScore {
            index: units[u].members[0],
            score: scores[u],
        })
        .collect();
    Ok((picked, diag))
}

fn mean_row(m: &Matrix, rows: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for &i in rows {
        for (o, v) in out.iter_mut().zip(m.row(i)) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|v| *v /= rows.len() as f64);
    out
}

fn unit_descriptor(desc: &Matrix, unit: &Unit, id: u64) -> Result<Descriptor> {
    let values = if unit.members.len() == 1 {
        desc.row(unit.members[0]).to_vec()
    } else {
        mean_row(desc, &unit.members)
    };
    Descriptor::new(id, values)
}

/// Chooses the next batch.
///
/// * random: seeded uniform draw of `n_rep` units without replacement
/// * uncertainty: the `n_rep` most uncertain units
/// * setcover: `n_unc` most uncertain, then greedy set cover down to `n_rep`
/// * bsq: `n_unc` most uncertain, then the `n_rep` best log-ratio scores
/// * upperbound: everything not yet annotated
///
/// `g_pool` is the Gaussian fitted to the whole pool; it is only read by
/// `bsq`.
pub fn strategy_step(
    strategy: &StrategyConfig,
    pool: &SamplePool,
    state: &AnnotationState,
    outputs: &LearnerOutputs,
    g_pool: Option<&DiagGaussian>,
) -> Result<QueryBatch> {
    strategy.validate()?;
    ensure!(
        state.n_non_annotated() > 0,
        Config,
        "no non-annotated samples left to query"
    );
    let iteration = state.iteration() + 1;
    let batch = |selected: Vec<usize>, scores: Vec<CandidateScore>| QueryBatch {
        iteration,
        selected,
        scores,
    };

    if strategy.kind == StrategyKind::Upperbound {
        return Ok(batch(state.non_annotated(), Vec::new()));
    }

    let units = query_units(strategy, pool, state)?;
    if units.is_empty() {
        return Ok(batch(Vec::new(), Vec::new()));
    }
    let flatten = |chosen: &[usize]| -> Vec<usize> {
        chosen
            .iter()
            .flat_map(|&u| units[u].members.iter().copied())
            .collect()
    };

    match strategy.kind {
        StrategyKind::Upperbound => unreachable!("handled above"),
        StrategyKind::Random => {
            let mut rng = seed::rng_from(seed::derive_indexed(strategy.seed, "random-query", iteration as u64));
            let n = strategy.n_rep.min(units.len());
            let chosen = index::sample(&mut rng, units.len(), n).into_vec();
            Ok(batch(flatten(&chosen), Vec::new()))
        }
        StrategyKind::Uncertainty => {
            let (chosen, scores) = uncertain_units(strategy, &units, outputs, Some(strategy.n_rep))?;
            Ok(batch(flatten(&chosen), scores))
        }
        StrategyKind::Setcover => {
            let (cands, _) = uncertain_units(strategy, &units, outputs, strategy.n_unc)?;
            let desc = outputs.descriptors.as_ref().unwrap_or(pool.embeddings());
            ensure!(
                desc.rows() == pool.len(),
                Shape,
                "{} descriptor rows for a pool of {}",
                desc.rows(),
                pool.len()
            );
            let universe = units
                .iter()
                .map(|u| unit_descriptor(desc, u, pool.id(u.members[0])))
                .collect::<Result<Vec<_>>>()?;
            let candidates: Vec<Descriptor> = cands.iter().map(|&u| universe[u].clone()).collect();
            let picks = greedy_set_cover(&candidates, &universe, strategy.n_rep)?;
            let chosen: Vec<usize> = picks.iter().map(|&p| cands[p]).collect();
            Ok(batch(flatten(&chosen), Vec::new()))
        }
        StrategyKind::Bsq => {
            let g_pool = g_pool.ok_or_else(|| Error::Config("bsq needs the pool Gaussian".into()))?;
            let (cands, _) = uncertain_units(strategy, &units, outputs, strategy.n_unc)?;
            let (chosen, scores) = bsq_units(strategy, pool, state, &units, &cands, g_pool)?;
            Ok(batch(flatten(&chosen), scores))
        }
    }
}

fn bsq_units(
    strategy: &StrategyConfig,
    pool: &SamplePool,
    state: &AnnotationState,
    units: &[Unit],
    cands: &[usize],
    g_pool: &DiagGaussian,
) -> Result<(Vec<usize>, Vec<CandidateScore>)> {
    let emb = pool.embeddings();
    let mut fitted_on = state.annotated().to_vec();
    let mut remaining = cands.to_vec();
    let mut chosen = Vec::new();
    let mut diag = Vec::new();
    let rounds = match strategy.bsq_mode {
        BsqMode::OneShot => 1,
        BsqMode::SequentialRefit => strategy.n_rep,
    };
    for round in 0..rounds {
        if remaining.is_empty() {
            break;
        }
        let g_an = fit_diag_gaussian_rows(emb, &fitted_on)?;
        let members: Vec<usize> = remaining
            .iter()
            .flat_map(|&u| units[u].members.iter().copied())
            .collect();
        let member_scores = score_candidates(&members, emb, g_pool, &g_an, strategy.aggregation)?;
        let mut per_sample = vec![0.0; pool.len()];
        for s in &member_scores {
            per_sample[s.index] = s.score;
        }
        let mut scored: Vec<(usize, f64)> = remaining
            .iter()
            .map(|&u| (u, unit_score(&units[u], &per_sample, strategy.group_reduce)))
            .collect();
        scored.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then(units[a.0].members[0].cmp(&units[b.0].members[0]))
        });
        if round == 0 {
            diag = scored
                .iter()
                .map(|&(u, s)| CandidateScore {
                    index: units[u].members[0],
                    score: s,
                })
                .collect();
        }
        let take = match strategy.bsq_mode {
            BsqMode::OneShot => strategy.n_rep,
            BsqMode::SequentialRefit => 1,
        };
        for &(u, _) in scored.iter().take(take) {
            chosen.push(u);
            fitted_on.extend(units[u].members.iter().copied());
        }
        remaining.retain(|u| !chosen.contains(u));
    }
    Ok((chosen, diag))
}

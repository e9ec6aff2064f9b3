//! Batch-mode active-learning experiments.
//!
//! The loop is: fit a proxy learner on the annotated set, score the rest,
//! let the strategy pick a batch, reveal the stored labels for it, log, and
//! repeat. Everything random is derived from the strategy seed, so a run is
//! a pure function of its inputs.

mod log;
mod proxy;
mod strategy;

use std::collections::HashMap;

pub use self::log::{ExperimentLog, IterationRecord, RunConfig, SCHEMA_VERSION};
pub use self::proxy::{proxy_fit, proxy_predict, ProxyConfig, ProxyLearner};
pub use self::strategy::{
    group_aggregate, strategy_step, CandidateScore, LearnerOutputs, QueryBatch, QueryMode, Reduce,
    StrategyConfig, StrategyKind,
};

use crate::bsq::{fit_diag_gaussian, fit_diag_gaussian_rows, DiagGaussian, MmdReference};
use crate::error::{ensure, Error, Result};
use crate::metrics::{class_entropy, mean_label_dice};
use crate::pool::{AnnotationState, SamplePool};
use crate::scoring::{stack_uncertainty, PredictionStack};
use crate::seed;

/// Optional inputs to [`run_experiment_with`].
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Held-out labelled samples; when present the proxy learner's mean
    /// per-class Dice on them is logged each iteration.
    pub eval_pool: Option<SamplePool>,
    /// Externally produced prediction stacks keyed by sample id. When set
    /// they replace the proxy learner as the uncertainty source.
    pub stacks: Option<HashMap<u64, PredictionStack>>,
    /// Descriptor matrix for the set-cover baseline (one row per pool
    /// sample).
    pub descriptors: Option<crate::pool::Matrix>,
}

/// Runs `n_iters` query iterations from the given initial annotated ids.
pub fn run_experiment(
    pool: &SamplePool,
    initial_ids: &[u64],
    strategy: &StrategyConfig,
    n_iters: usize,
) -> Result<ExperimentLog> {
    run_experiment_with(pool, initial_ids, strategy, n_iters, &RunOptions::default())
}

struct Recorder<'a> {
    pool: &'a SamplePool,
    mmd_ref: Option<MmdReference>,
    eval: Option<&'a SamplePool>,
    strategy: &'a StrategyConfig,
}

impl Recorder<'_> {
    fn record(&self, state: &AnnotationState, queried: &[usize]) -> Result<IterationRecord> {
        let annotated = state.annotated();
        let entropy = match self.pool.labels() {
            Some(labels) => {
                let l: Vec<u32> = annotated.iter().map(|&i| labels[i]).collect();
                Some(class_entropy(&l)?)
            }
            None => None,
        };
        let g_an = match fit_diag_gaussian_rows(self.pool.embeddings(), annotated) {
            Ok(g) => Some(g),
            Err(Error::InsufficientData { .. }) => None,
            Err(e) => return Err(e),
        };
        let mmd = match &self.mmd_ref {
            Some(r) => Some(r.mmd_to(&self.pool.embeddings().select_rows(annotated))?),
            None => None,
        };
        let dice = match self.eval {
            Some(eval) => self.eval_dice(state, eval)?,
            None => None,
        };
        Ok(IterationRecord {
            iter: state.iteration(),
            queried_ids: queried.iter().map(|&i| self.pool.id(i)).collect(),
            n_annotated: state.n_annotated(),
            entropy,
            g_an_mean: g_an.as_ref().map(|g| g.mean().to_vec()),
            g_an_std: g_an.as_ref().map(|g| g.std().to_vec()),
            mmd,
            dice,
            msd: None,
        })
    }

    fn eval_dice(&self, state: &AnnotationState, eval: &SamplePool) -> Result<Option<f64>> {
        let (Some(labels), Some(truth)) = (self.pool.labels(), eval.labels()) else {
            return Ok(None);
        };
        let learner = fit_proxy(self.pool, state, labels, self.strategy, "eval-proxy")?;
        let predicted = learner.predict_labels(eval.embeddings())?;
        let n_labels = self.pool.n_classes().max(eval.n_classes()) as u32;
        mean_label_dice((1, 1, eval.len()), &predicted, truth, n_labels)
    }
}

fn fit_proxy(
    pool: &SamplePool,
    state: &AnnotationState,
    labels: &[u32],
    strategy: &StrategyConfig,
    label: &str,
) -> Result<ProxyLearner> {
    let annotated = state.annotated();
    let reference = pool.embeddings().select_rows(annotated);
    let ref_labels: Vec<u32> = annotated.iter().map(|&i| labels[i]).collect();
    let config = ProxyConfig {
        k: strategy.proxy.k.min(annotated.len()),
        ..strategy.proxy
    };
    let seed = seed::derive_indexed(strategy.seed, label, state.iteration() as u64);
    proxy_fit(&reference, &ref_labels, pool.n_classes(), config, seed)
}

fn learner_outputs(
    pool: &SamplePool,
    state: &AnnotationState,
    strategy: &StrategyConfig,
    options: &RunOptions,
) -> Result<LearnerOutputs> {
    let mut out = LearnerOutputs {
        uncertainty: None,
        descriptors: options.descriptors.clone(),
    };
    if !strategy.needs_uncertainty() {
        return Ok(out);
    }
    let non = state.non_annotated();
    let stacks: Vec<PredictionStack> = match &options.stacks {
        Some(map) => non
            .iter()
            .map(|&i| {
                map.get(&pool.id(i)).cloned().ok_or_else(|| {
                    Error::Config(format!("no prediction stack for sample {}", pool.id(i)))
                })
            })
            .collect::<Result<_>>()?,
        None => {
            let labels = pool.labels().ok_or_else(|| {
                Error::Config("uncertainty without prediction stacks needs pool labels for the proxy learner".into())
            })?;
            let learner = fit_proxy(pool, state, labels, strategy, "proxy")?;
            let ids: Vec<u64> = non.iter().map(|&i| pool.id(i)).collect();
            learner.predict(&pool.embeddings().select_rows(&non), &ids)?
        }
    };
    let mut unc = vec![0.0; pool.len()];
    for (&i, s) in non.iter().zip(&stacks) {
        let s = if strategy.binarize { s.binarized() } else { s.clone() };
        unc[i] = stack_uncertainty(&s)?;
    }
    out.uncertainty = Some(unc);
    Ok(out)
}

pub fn run_experiment_with(
    pool: &SamplePool,
    initial_ids: &[u64],
    strategy: &StrategyConfig,
    n_iters: usize,
    options: &RunOptions,
) -> Result<ExperimentLog> {
    strategy.validate()?;
    ensure!(!initial_ids.is_empty(), Config, "initial annotated set is empty");
    if strategy.mode == QueryMode::Group {
        ensure!(pool.groups().is_some(), Config, "group-mode querying needs group ids");
    }
    if let Some(eval) = &options.eval_pool {
        ensure!(
            eval.n_lat() == pool.n_lat(),
            Shape,
            "evaluation pool has {} dims, pool has {}",
            eval.n_lat(),
            pool.n_lat()
        );
    }
    let initial = pool.indices_of(initial_ids)?;
    let mut state = AnnotationState::new(pool.len(), &initial)?;

    let g_pool: Option<DiagGaussian> = match strategy.kind {
        StrategyKind::Bsq => Some(fit_diag_gaussian(pool.embeddings())?),
        _ => None,
    };
    let recorder = Recorder {
        pool,
        mmd_ref: if strategy.log_mmd {
            Some(MmdReference::new(pool.embeddings().clone(), strategy.kernel)?)
        } else {
            None
        },
        eval: options.eval_pool.as_ref(),
        strategy,
    };

    let mut iterations = Vec::with_capacity(n_iters + 1);
    let mut exhausted = false;

    if strategy.kind == StrategyKind::Upperbound {
        let rest = state.non_annotated();
        state = AnnotationState::new(pool.len(), &[initial.as_slice(), rest.as_slice()].concat())?;
        let order = state.annotated().to_vec();
        iterations.push(recorder.record(&state, &order)?);
    } else {
        iterations.push(recorder.record(&state, &initial)?);
        for _ in 0..n_iters {
            if state.n_non_annotated() == 0 {
                exhausted = true;
                break;
            }
            let outputs = learner_outputs(pool, &state, strategy, options)?;
            let batch = strategy_step(strategy, pool, &state, &outputs, g_pool.as_ref())?;
            if batch.selected.is_empty() {
                exhausted = true;
                break;
            }
            state = state.annotate(&batch.selected)?;
            state.check_invariants()?;
            iterations.push(recorder.record(&state, &batch.selected)?);
        }
    }
    if exhausted {
        ::log::warn!(
            "pool exhausted after {} of {n_iters} iterations",
            iterations.len() - 1
        );
    }

    Ok(ExperimentLog {
        schema_version: SCHEMA_VERSION,
        config: RunConfig {
            strategy: strategy.clone(),
            n_iters,
            initial_ids: initial_ids.to_vec(),
            pool_size: pool.len(),
            n_lat: pool.n_lat(),
            eval_size: options.eval_pool.as_ref().map(SamplePool::len),
        },
        exhausted,
        iterations,
    })
}

use std::collections::HashMap;

use alquery::ingest::{imbalanced_priors, synth_clusters, SynthConfig};
use alquery::pool::draw_initial;
use alquery::report::{difference_table, long_format};
use alquery::scoring::PredictionStack;
use alquery::simulate::{
    run_experiment, run_experiment_with, ExperimentLog, QueryMode, RunOptions, StrategyConfig, StrategyKind,
};
use alquery::{Error, SamplePool};

fn pool(seed: u64) -> SamplePool {
    synth_clusters(&SynthConfig::new(6, 60, 4, seed)).unwrap()
}

fn imbalanced_start(pool: &SamplePool, seed: u64) -> Vec<u64> {
    let priors = imbalanced_priors(pool.n_classes(), 3, 10.0, seed).unwrap();
    draw_initial(pool, &priors, 8, seed)
        .unwrap()
        .into_iter()
        .map(|i| pool.id(i))
        .collect()
}

fn bsq(seed: u64) -> StrategyConfig {
    let mut cfg = StrategyConfig::sample_defaults(StrategyKind::Bsq, seed);
    cfg.n_unc = None;
    cfg.n_rep = 8;
    cfg
}

#[test]
fn annotated_set_moves_toward_pool() {
    let mut improved = 0;
    for seed in 0..10 {
        let p = pool(seed);
        let log = run_experiment(&p, &imbalanced_start(&p, seed), &bsq(seed), 15).unwrap();
        let first = log.iterations[0].mmd.unwrap();
        let last = log.iterations.last().unwrap().mmd.unwrap();
        improved += usize::from(last < first);
    }
    assert!(improved >= 9, "MMD dropped in only {improved}/10 runs");
}

#[test]
fn runs_are_reproducible() {
    let p = pool(3);
    let init = imbalanced_start(&p, 3);
    for kind in [StrategyKind::Random, StrategyKind::Uncertainty, StrategyKind::Setcover, StrategyKind::Bsq] {
        let mut cfg = StrategyConfig::sample_defaults(kind, 9);
        cfg.n_unc = Some(20);
        cfg.n_rep = 5;
        let a = run_experiment(&p, &init, &cfg, 4).unwrap().to_json().unwrap();
        let b = run_experiment(&p, &init, &cfg, 4).unwrap().to_json().unwrap();
        assert_eq!(a, b, "{}", kind.name());
    }
}

#[test]
fn log_round_trips_through_file() {
    let p = pool(1);
    let log = run_experiment(&p, &imbalanced_start(&p, 1), &bsq(1), 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.json");
    log.write(&path).unwrap();
    assert_eq!(ExperimentLog::read(&path).unwrap(), log);
}

#[test]
fn wrong_schema_version_is_format_error() {
    let p = pool(1);
    let log = run_experiment(&p, &imbalanced_start(&p, 1), &bsq(1), 1).unwrap();
    let text = log.to_json().unwrap().replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    assert!(matches!(ExperimentLog::from_json(&text), Err(Error::Format(_))));
}

#[test]
fn long_format_has_one_row_per_metric() {
    let p = pool(2);
    let log = run_experiment(&p, &imbalanced_start(&p, 2), &bsq(2), 5).unwrap();
    // n_annotated, entropy, mmd, g_an_joint_mean, g_an_joint_std
    assert_eq!(long_format(std::slice::from_ref(&log)).len(), log.iterations.len() * 5);
}

#[test]
fn difference_table_quartiles() {
    let p = pool(4);
    let init = imbalanced_start(&p, 4);
    let mut logs = Vec::new();
    for seed in 0..5 {
        logs.push(run_experiment(&p, &init, &bsq(seed), 3).unwrap());
        let mut r = StrategyConfig::sample_defaults(StrategyKind::Random, seed);
        r.n_rep = 8;
        logs.push(run_experiment(&p, &init, &r, 3).unwrap());
    }
    let rows = difference_table(&logs);
    let row = rows
        .iter()
        .find(|r| r.iteration == 3 && r.metric == "entropy")
        .unwrap();
    assert_eq!((row.strategy_a.as_str(), row.strategy_b.as_str()), ("bsq", "random"));
    let mut d: Vec<f64> = (0..5)
        .map(|k| logs[2 * k].iterations[3].entropy.unwrap() - logs[2 * k + 1].iterations[3].entropy.unwrap())
        .collect();
    d.sort_by(f64::total_cmp);
    assert_eq!(row.n, 5);
    assert_eq!(row.median, d[2]);
    assert_eq!(row.q1, d[1]);
    assert_eq!(row.q3, d[3]);
}

#[test]
fn unequal_lengths_truncate() {
    let p = pool(5);
    let init = imbalanced_start(&p, 5);
    let a = run_experiment(&p, &init, &bsq(0), 4).unwrap();
    let mut r = StrategyConfig::sample_defaults(StrategyKind::Random, 0);
    r.n_rep = 8;
    let b = run_experiment(&p, &init, &r, 2).unwrap();
    let rows = difference_table(&[a, b]);
    assert!(rows.iter().all(|r| r.iteration <= 2));
    assert!(rows.iter().any(|r| r.iteration == 2));
}

#[test]
fn group_mode_queries_whole_groups() {
    let base = pool(6);
    let groups: Vec<u32> = (0..base.len() as u32).map(|i| i / 12).collect();
    let p = SamplePool::with_ids(
        base.embeddings().clone(),
        base.labels().map(<[u32]>::to_vec),
        Some(groups.clone()),
        base.sample_ids().to_vec(),
    )
    .unwrap();
    let cfg = StrategyConfig::group_defaults(StrategyKind::Bsq, 1);
    assert_eq!(cfg.mode, QueryMode::Group);
    let init: Vec<u64> = (0..12).map(|i| p.id(i)).collect();
    let log = run_experiment(&p, &init, &cfg, 4).unwrap();
    for rec in &log.iterations[1..] {
        assert_eq!(rec.queried_ids.len(), 12);
        let g: std::collections::BTreeSet<u32> = rec
            .queried_ids
            .iter()
            .map(|id| groups[p.index_of(*id).unwrap()])
            .collect();
        assert_eq!(g.len(), 1);
    }
}

#[test]
fn external_stacks_drive_uncertainty() {
    let p = pool(7);
    // Samples with an odd id get noisy stacks; only they should be queried.
    let stacks: HashMap<u64, PredictionStack> = p
        .sample_ids()
        .iter()
        .map(|&id| {
            let v: Vec<f64> = (0..4)
                .flat_map(|mc| {
                    let x = if id % 2 == 1 && mc % 2 == 0 { 0.9 } else { 0.1 };
                    [x, 1.0 - x]
                })
                .collect();
            (id, PredictionStack::new(id, 4, 1, 2, v).unwrap())
        })
        .collect();
    let mut cfg = StrategyConfig::sample_defaults(StrategyKind::Uncertainty, 0);
    cfg.n_rep = 10;
    let options = RunOptions {
        stacks: Some(stacks),
        ..RunOptions::default()
    };
    let init: Vec<u64> = vec![p.id(0)];
    let log = run_experiment_with(&p, &init, &cfg, 3, &options).unwrap();
    for rec in &log.iterations[1..] {
        assert!(rec.queried_ids.iter().all(|id| id % 2 == 1));
    }
}

#[test]
fn eval_pool_logs_dice() {
    let p = pool(8);
    let eval = pool(80);
    let mut cfg = StrategyConfig::sample_defaults(StrategyKind::Random, 0);
    cfg.n_rep = 20;
    let options = RunOptions {
        eval_pool: Some(eval),
        ..RunOptions::default()
    };
    let init: Vec<u64> = (0..10).map(|i| p.id(i)).collect();
    let log = run_experiment_with(&p, &init, &cfg, 3, &options).unwrap();
    for rec in &log.iterations {
        let d = rec.dice.unwrap();
        assert!((0.0..=1.0).contains(&d));
    }
}

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use alquery::ingest::{
    fit_pca, fit_random_projection, imbalanced_priors, read_idx, read_matrix_csv, standardize_rows,
    synth_clusters, write_matrix_csv_to, MatrixCsv, SynthConfig,
};
use alquery::bsq::{Aggregation, BsqMode, Kernel};
use alquery::pool::{draw_initial, split_holdout};
use alquery::report::{difference_table, long_format, write_rows};
use alquery::scoring::read_prediction_stacks;
use alquery::simulate::{
    run_experiment_with, ExperimentLog, QueryMode, Reduce, RunOptions, StrategyConfig, StrategyKind,
};
use alquery::{Error, Result, SamplePool};
use serde_json::json;

use crate::args::*;
use crate::manifest::write_atomic;

/// What a command read, wrote and how it was configured.
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub config: serde_json::Value,
}

/// Adds the offending path to I/O errors.
fn at<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })
}

fn write_csv(path: &Path, table: &MatrixCsv) -> Result<()> {
    let mut buf = Vec::new();
    write_matrix_csv_to(&mut buf, table)?;
    Ok(write_atomic(path, &buf)?)
}

pub fn synth(args: &SynthArgs) -> Result<Outcome> {
    let cfg = SynthConfig {
        center_spread: args.spread,
        cluster_std: args.cluster_std,
        ..SynthConfig::new(args.classes, args.per_class, args.dims, args.common.seed)
    };
    let mut table = MatrixCsv::from_pool(&synth_clusters(&cfg)?);
    if let Some(size) = args.group_size {
        if size == 0 {
            return Err(Error::Config("--group-size must be at least 1".into()));
        }
        table.groups = Some((0..table.ids.len()).map(|i| (i / size) as u32).collect());
    }
    write_csv(&args.common.out, &table)?;
    Ok(Outcome {
        inputs: vec![],
        outputs: vec![args.common.out.clone()],
        config: json!({ "synth": cfg, "group_size": args.group_size }),
    })
}

pub fn ingest_idx(args: &IngestIdxArgs) -> Result<Outcome> {
    let images = at(&args.images, read_idx(&args.images))?;
    if images.dims().len() < 2 || images.dims()[0] == 0 {
        return Err(Error::Shape(format!(
            "image tensor needs at least 2 dims with items, got {:?}",
            images.dims()
        )));
    }
    let mut matrix = images.to_matrix();
    let mut n = matrix.rows();
    let mut inputs = vec![args.images.clone()];
    let labels = match &args.labels {
        Some(path) => {
            inputs.push(path.clone());
            let t = at(path, read_idx(path))?;
            if t.dims() != [n] {
                return Err(Error::Shape(format!(
                    "label tensor dims {:?} do not match {n} images",
                    t.dims()
                )));
            }
            Some(t.data().iter().map(|&b| u32::from(b)).collect::<Vec<_>>())
        }
        None => None,
    };
    if let Some(limit) = args.limit {
        if limit < n {
            let keep: Vec<usize> = (0..limit).collect();
            matrix = matrix.select_rows(&keep);
            n = limit;
        }
    }
    let table = MatrixCsv {
        ids: (0..n as u64).collect(),
        matrix,
        labels: labels.map(|mut l| {
            l.truncate(n);
            l
        }),
        groups: None,
    };
    write_csv(&args.common.out, &table)?;
    Ok(Outcome {
        inputs,
        outputs: vec![args.common.out.clone()],
        config: json!({ "image_dims": images.dims(), "limit": args.limit, "rows": n }),
    })
}

pub fn embed(args: &EmbedArgs) -> Result<Outcome> {
    let mut table = at(&args.input, read_matrix_csv(&args.input))?;
    let input = if args.standardize {
        standardize_rows(&table.matrix)
    } else {
        table.matrix.clone()
    };
    let encoder = match args.encoder {
        EncoderArg::Pca => fit_pca(&input, args.n_lat)?,
        EncoderArg::Random => fit_random_projection(&input, args.n_lat, args.common.seed)?,
    };
    if encoder.zero_variance_components() > 0 {
        log::warn!(
            "{} of {} latent dimensions carry no variance",
            encoder.zero_variance_components(),
            args.n_lat
        );
    }
    table.matrix = encoder.encode(&input)?;
    write_csv(&args.common.out, &table)?;
    Ok(Outcome {
        inputs: vec![args.input.clone()],
        outputs: vec![args.common.out.clone()],
        config: json!({
            "encoder": format!("{:?}", encoder.kind()),
            "n_lat": args.n_lat,
            "standardize": args.standardize,
            "explained_variance_ratio": encoder.explained_variance_ratio(),
        }),
    })
}

fn parse_ratios(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("--holdout expects three numbers, got `{s}`")))?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(Error::Config(format!("--holdout expects three ratios, got `{s}`"))),
    }
}

fn read_ids(path: &Path) -> Result<Vec<u64>> {
    let text = at(path, fs::read_to_string(path).map_err(Error::from))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse()
                .map_err(|_| Error::Format(format!("{}: `{l}` is not a sample id", path.display())))
        })
        .collect()
}

pub fn strategy_config(args: &RunArgs) -> Result<StrategyConfig> {
    let kind = match args.strategy {
        StrategyArg::Random => StrategyKind::Random,
        StrategyArg::Uncertainty => StrategyKind::Uncertainty,
        StrategyArg::Setcover => StrategyKind::Setcover,
        StrategyArg::Bsq => StrategyKind::Bsq,
        StrategyArg::Upperbound => StrategyKind::Upperbound,
    };
    let seed = args.common.seed;
    let mut cfg = match args.mode {
        ModeArg::Sample => StrategyConfig::sample_defaults(kind, seed),
        ModeArg::Group => StrategyConfig::group_defaults(kind, seed),
    };
    if let Some(b) = args.batch {
        cfg.n_rep = b;
    }
    if let Some(n) = &args.n_unc {
        cfg.n_unc = match n.as_str() {
            "all" => None,
            s => Some(
                s.parse()
                    .map_err(|_| Error::Config(format!("--n-unc expects a count or `all`, got `{s}`")))?,
            ),
        };
    }
    cfg.bsq_mode = match args.bsq_mode {
        BsqModeArg::OneShot => BsqMode::OneShot,
        BsqModeArg::SequentialRefit => BsqMode::SequentialRefit,
    };
    cfg.aggregation = match args.aggregation {
        AggregationArg::PerDimension => Aggregation::PerDimension,
        AggregationArg::ProductGaussian => Aggregation::ProductGaussian,
    };
    cfg.group_reduce = match args.group_reduce {
        ReduceArg::Mean => Reduce::Mean,
        ReduceArg::Max => Reduce::Max,
        ReduceArg::Sum => Reduce::Sum,
    };
    if args.mode == ModeArg::Group {
        cfg.mode = QueryMode::Group;
    }
    if !(args.mmd_sigma > 0.0 && args.mmd_sigma.is_finite()) {
        return Err(Error::Config("--mmd-sigma must be positive".into()));
    }
    cfg.kernel = Kernel::Gaussian { sigma: args.mmd_sigma };
    cfg.log_mmd = !args.no_mmd;
    cfg.binarize = args.binarize;
    cfg.proxy.k = args.proxy_k;
    cfg.proxy.n_models = args.proxy_models;
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(args: &RunArgs) -> Result<Outcome> {
    let strategy = strategy_config(args)?;
    let seed = args.common.seed;
    let full = at(&args.pool, read_matrix_csv(&args.pool))?.into_pool()?;
    let mut inputs = vec![args.pool.clone()];

    let mut options = RunOptions::default();
    let (pool, split) = match &args.holdout {
        Some(r) => {
            let split = split_holdout(&full, parse_ratios(r)?, seed)?;
            let pool = full.subset(&full.indices_of(&split.pool_ids)?)?;
            options.eval_pool = Some(full.subset(&full.indices_of(&split.test_ids)?)?);
            (pool, Some(split))
        }
        None => (full, None),
    };

    let initial: Vec<u64> = match &args.init_file {
        Some(path) => {
            inputs.push(path.clone());
            read_ids(path)?
        }
        None => {
            let priors = imbalanced_priors(pool.n_classes(), args.reduced_classes, args.reduction, seed)?;
            draw_initial(&pool, &priors, args.n_init, seed)?
                .into_iter()
                .map(|i| pool.id(i))
                .collect()
        }
    };

    if let Some(path) = &args.stacks {
        inputs.push(path.clone());
        let stacks: HashMap<u64, _> = at(path, read_prediction_stacks(path))?
            .into_iter()
            .map(|s| (s.sample_id(), s))
            .collect();
        options.stacks = Some(stacks);
    }

    let log = run_experiment_with(&pool, &initial, &strategy, args.iters, &options)?;
    write_atomic(&args.common.out, log.to_json()?.as_bytes())?;
    Ok(Outcome {
        inputs,
        outputs: vec![args.common.out.clone()],
        config: json!({
            "strategy": strategy,
            "iters": args.iters,
            "initial_ids": initial,
            "holdout": split.as_ref().map(|s| json!({
                "pool": s.pool_ids.len(),
                "validation": s.validation_ids.len(),
                "test": s.test_ids.len(),
            })),
            "pool_size": pool_summary(&pool),
        }),
    })
}

fn pool_summary(pool: &SamplePool) -> serde_json::Value {
    json!({ "rows": pool.len(), "n_lat": pool.n_lat(), "classes": pool.n_classes() })
}

pub fn report(args: &ReportArgs) -> Result<Outcome> {
    let logs = args
        .logs
        .iter()
        .map(|p| {
            at(p, ExperimentLog::read(p)).map_err(|e| match e {
                Error::Format(m) => Error::Format(format!("{}: {m}", p.display())),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let out = &args.common.out;
    fs::create_dir_all(out)?;
    let long_path = out.join("long.csv");
    let diff_path = out.join("differences.csv");

    let mut buf = Vec::new();
    write_rows(&mut buf, &long_format(&logs))?;
    write_atomic(&long_path, &buf)?;
    let diffs = difference_table(&logs);
    buf.clear();
    write_rows(&mut buf, &diffs)?;
    write_atomic(&diff_path, &buf)?;

    Ok(Outcome {
        inputs: args.logs.clone(),
        outputs: vec![long_path, diff_path],
        config: json!({ "logs": logs.len(), "difference_rows": diffs.len() }),
    })
}

//! Imbalanced-start experiment on synthetic clusters: prints the class
//! entropy of the annotated set per iteration for BSQ and random querying.

use alquery::bsq::fit_diag_gaussian;
use alquery::ingest::{imbalanced_priors, synth_clusters, SynthConfig};
use alquery::pool::draw_initial;
use alquery::simulate::{run_experiment, StrategyConfig, StrategyKind};

fn main() -> alquery::Result<()> {
    let experiments: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    for seed in 0..experiments {
        let pool = synth_clusters(&SynthConfig::new(10, 500, 5, seed))?;
        let priors = imbalanced_priors(10, 3, 10.0, seed)?;
        let init: Vec<u64> = draw_initial(&pool, &priors, 10, seed)?
            .into_iter()
            .map(|i| pool.id(i))
            .collect();
        for kind in [StrategyKind::Bsq, StrategyKind::Random] {
            let mut cfg = StrategyConfig::sample_defaults(kind, seed);
            cfg.n_unc = None;
            cfg.n_rep = 10;
            cfg.log_mmd = false;
            let log = run_experiment(&pool, &init, &cfg, 30)?;
            let h = log.entropy_series();
            let last = log.iterations.last().unwrap();
            let g = fit_diag_gaussian(pool.embeddings())?;
            let ratio: Vec<String> = last
                .g_an_std
                .as_ref()
                .unwrap()
                .iter()
                .zip(g.std())
                .map(|(a, p)| format!("{:.2}", a / p))
                .collect();
            println!(
                "seed {seed} {:<6} H0={:.3} H3={:.3} H30={:.3} std_ratio=[{}]",
                kind.name(),
                h[0],
                h[3],
                h[30],
                ratio.join(" ")
            );
        }
    }
    Ok(())
}

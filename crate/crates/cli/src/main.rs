mod args;
mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::process::ExitCode;

use alquery::Error;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::manifest::RunManifest;

fn init_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("ALQUERY_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Config(format!("ALQUERY_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size thread pool: {e}")))
}

/// Expanded argv without the `--config` pair, so the manifest replays on
/// its own.
fn replay_argv(argv: &[OsString]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in argv {
        let s = a.to_string_lossy().into_owned();
        if skip {
            skip = false;
            continue;
        }
        if s == "--config" {
            skip = true;
            continue;
        }
        if s.starts_with("--config=") {
            continue;
        }
        out.push(s);
    }
    out
}

fn execute(cli: &Cli, argv: &[OsString]) -> Result<(), Error> {
    init_threads()?;
    let (outcome, common) = match &cli.command {
        Command::Synth(a) => (commands::synth(a)?, &a.common),
        Command::IngestIdx(a) => (commands::ingest_idx(a)?, &a.common),
        Command::Embed(a) => (commands::embed(a)?, &a.common),
        Command::Run(a) => (commands::run(a)?, &a.common),
        Command::Report(a) => (commands::report(a)?, &a.common),
    };
    let mut inputs = outcome.inputs;
    inputs.extend(common.config.clone());
    RunManifest {
        command: cli.command.name().to_string(),
        argv: replay_argv(argv),
        inputs,
        outputs: outcome.outputs,
        config: outcome.config,
        seed: common.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
    .write(&common.out)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_configuration() {
        2
    } else {
        1
    }
}

//! The `apt-align` command line: ingestion, splitting, pair construction,
//! tiny-model training and generation, evaluation and reporting.
//!
//! Every command writes its artifacts plus a `run.json` (resolved
//! configuration, seed, inputs) to `--out`. Exit codes: 0 success, 1 I/O
//! failure, 2 schema or configuration error, 3 missing data, 4 numeric
//! degeneracy.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod eval;
pub mod io;
pub mod schema;

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

pub use args::Cli;
pub use error::CliError;

use args::Command;
use config::RunConfig;

#[derive(Serialize)]
struct RunRecord<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    inputs: BTreeMap<&'a str, String>,
    config: C,
}

/// Writes `run.json` into `out`.
pub(crate) fn write_run_record<C: Serialize>(
    out: &Path,
    command: &str,
    seed: u64,
    inputs: BTreeMap<&str, String>,
    config: C,
) -> Result<(), CliError> {
    let rec = RunRecord { tool: "apt-align", version: env!("CARGO_PKG_VERSION"), command, seed, inputs, config };
    io::write_json(&out.join("run.json"), &rec)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let seed = config::pick(cli.seed, cfg.seed, 0);
    let out = match (&cli.out, &cli.command) {
        (Some(o), _) => o.clone(),
        (None, Command::Report(a)) => a.run.join("report"),
        (None, _) => "run".into(),
    };
    io::ensure_dir(&out)?;
    let out = out.as_path();
    match cli.command {
        Command::Ingest(a) => commands::data::ingest(&a, out, seed),
        Command::Split(a) => commands::data::split(&a, &cfg, out, seed),
        Command::Pairs(a) => commands::data::pairs(&a, out, seed),
        Command::Train(a) => commands::train::train(&a, &cfg, out, seed),
        Command::Gen(a) => commands::train::gen(&a, &cfg, out, seed),
        Command::Eval(a) => commands::eval::eval(&a, &cfg, out, seed),
        Command::PtdEval(a) => commands::ptd::ptd_eval(&a, &cfg, out, seed),
        Command::Report(a) => commands::report::report(&a, out, seed),
    }
}

//! `langevin-lab`: runs one experiment manifest and writes `results.csv`,
//! `results.json` and `figure.svg` to the output directory.
//!
//! Exit status: 0 on success, 2 for an invalid manifest, 3 when the
//! numerics did not converge (partial artifacts are still written), 1 for
//! I/O failures.

mod commands;
mod manifest;
mod report;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};

use crate::commands::{Outcome, Plan};
use crate::manifest::{hashes, Hashes, Manifest, Operation};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+", env!("LANGEVIN_LAB_REV"));

#[derive(Debug, Parser)]
#[command(name = "langevin-lab", version = VERSION, about)]
struct Cli {
    /// Operation to run; must match the manifest's `operation`.
    #[arg(value_enum)]
    subcommand: Operation,
    /// Experiment manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory; defaults to the manifest's `out`, then `./<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "LANGEVIN_LAB_THREADS")]
    threads: Option<usize>,
}

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Invalid(String),
    NonConvergence(String),
    Io(String),
}

impl Failure {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Failure::Invalid(msg.into())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::NonConvergence(_) => 3,
            Failure::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::NonConvergence(m) | Failure::Io(m) => m,
        }
    }
}

impl From<langevin_ldp::Error> for Failure {
    fn from(e: langevin_ldp::Error) -> Self {
        use langevin_ldp::Error as E;
        match e {
            E::InvalidParameter(_) | E::InvalidRegime { .. } | E::NonFinite(_) | E::Empty(_) => {
                Failure::Invalid(e.to_string())
            }
            E::Quadrature(_) | E::Inconclusive(_) => Failure::NonConvergence(e.to_string()),
            E::Io(_) => Failure::Io(e.to_string()),
        }
    }
}

fn io(e: std::io::Error) -> Failure {
    Failure::Io(e.to_string())
}

struct Run<'a> {
    manifest: &'a Manifest,
    knobs: Value,
    hashes: Hashes,
    threads: usize,
    started: Instant,
}

impl Run<'_> {
    fn record(&self, status: &str, outcome: Option<&Outcome>, error: Option<&str>) -> Value {
        let m = self.manifest;
        json!({
            "name": m.name,
            "operation": m.operation,
            "seed": m.seed,
            "version": VERSION,
            "manifest_hash": self.hashes.manifest_hash,
            "config_hash": self.hashes.config_hash,
            "params": m.params,
            "knobs": self.knobs,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "threads": self.threads,
            "status": status,
            "headline": outcome.map(|o| json!({ "name": o.headline.0, "value": o.headline.1 })),
            "result": outcome.map(|o| o.result.clone()),
            "error": error,
        })
    }
}

fn write_json(dir: &Path, v: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| Failure::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(dir.join("results.json"), text).map_err(io)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(e.to_string()))?;
    }
    let manifest = Manifest::load(&cli.manifest)?;
    if manifest.operation != cli.subcommand {
        return Err(Failure::invalid(format!(
            "subcommand `{}` does not match the manifest operation `{}`",
            cli.subcommand.name(),
            manifest.operation.name()
        )));
    }
    let plan = Plan::resolve(&manifest)?;
    let knobs = plan.knobs_value();
    let run = Run {
        manifest: &manifest,
        hashes: hashes(&manifest, &knobs),
        knobs,
        threads: rayon::current_num_threads(),
        started: Instant::now(),
    };
    let base = cli.manifest.parent().unwrap_or(Path::new("."));
    let out = cli
        .out
        .clone()
        .or_else(|| manifest.out.clone())
        .unwrap_or_else(|| PathBuf::from(&manifest.name));
    std::fs::create_dir_all(&out).map_err(io)?;

    let outcome = match plan.execute(&manifest, base) {
        Ok(o) => o,
        Err(Failure::NonConvergence(msg)) => {
            write_json(&out, &run.record("non-converged", None, Some(&msg)))?;
            return Err(Failure::NonConvergence(msg));
        }
        Err(e) => return Err(e),
    };
    std::fs::write(out.join("results.csv"), &outcome.csv).map_err(io)?;
    if let Some(fig) = &outcome.figure {
        let mut fig = fig.clone();
        fig.metadata = format!(
            "{} seed={} manifest={} version={}",
            manifest.name, manifest.seed, run.hashes.manifest_hash, VERSION
        );
        std::fs::write(out.join("figure.svg"), fig.render()).map_err(io)?;
    }
    if outcome.converged {
        write_json(&out, &run.record("ok", Some(&outcome), None))?;
        Ok(())
    } else {
        let msg = "the numerics did not converge";
        write_json(&out, &run.record("non-converged", Some(&outcome), Some(msg)))?;
        Err(Failure::NonConvergence(msg.into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("langevin-lab: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

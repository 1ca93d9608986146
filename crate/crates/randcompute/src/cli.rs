//! Command-line front end: four subcommands over one config format.
//!
//! * `analyze`  — purely analytic bound report for the configured setup
//! * `simulate` — one seeded run; CSV artifacts (plus latency across
//!   replicas when a round target is configured)
//! * `sweep`    — stability probes over a rate grid, or bisection for the
//!   critical rate
//! * `verify`   — the built-in verification suite
//!
//! Exit codes: 0 success, 1 invalid input, 2 runtime failure,
//! 3 verification failure.  Every artifact embeds the config hash and seed;
//! identical config + seed reproduces identical bytes.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::analytics::{bound_report, AnalyticsError, BoundContext, BoundReport};
use crate::config::{self, ConfigError, ConfigFile, Resolved};
use crate::engine::{EngineError, StopRule};
use crate::experiments::{
    estimate_beta_star, measure_latency, stability_probe, ExperimentError, StabilityProbe,
};
use crate::report::{self, sig12, CsvMeta};
use crate::verify;

/// Salt for the per-replica seeds of the latency measurement attached to a
/// round-target `simulate` run.
const LATENCY_SALT: u64 = 0x6c61_7463;

#[derive(Debug, Parser)]
#[command(
    name = "randcompute",
    version,
    about = "Slotted-time gossip simulator and analytics for in-network tree aggregation",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the analytic report (spectrum, hitting/mixing, rate and
    /// latency bounds) for the configured graph and schema; no simulation.
    Analyze(CommonArgs),
    /// Run one seeded simulation and write its CSV artifacts.
    Simulate(SimulateArgs),
    /// Probe stability over a rate grid or bisect for the critical rate.
    Sweep(SweepArgs),
    /// Run the built-in verification suite and exit nonzero on any failure.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Path to the TOML config (see the documented example config).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the global seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory for artifacts (created if missing).
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also write the consumed-result audit CSV (round, slot, value, trace).
    #[arg(long)]
    audit: bool,
    /// Override the arrival rate.
    #[arg(long, value_name = "F")]
    beta: Option<f64>,
    /// Override the slot horizon (clears any round target).
    #[arg(long, value_name = "N")]
    slots: Option<u64>,
    /// Override the round target (clears any slot horizon).
    #[arg(long, value_name = "N")]
    rounds: Option<u64>,
    /// Override the replica count for the latency measurement.
    #[arg(long, value_name = "N")]
    replicas: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the probe replica count.
    #[arg(long, value_name = "N")]
    replicas: Option<usize>,
    /// Override the rate grid (comma-separated).
    #[arg(long, value_name = "F,F,...", value_delimiter = ',')]
    betas: Vec<f64>,
    /// Bisect for the critical rate instead of probing a grid.
    #[arg(long)]
    bisect: bool,
    /// Override the bisection bracket width.
    #[arg(long, value_name = "F")]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Comma-separated criterion ids to run (default: all nine).
    #[arg(long, value_name = "N,N,...", value_delimiter = ',')]
    only: Vec<usize>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("writing {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("{failed} of {total} verification criteria failed")]
    VerifyFailed { failed: usize, total: usize },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::InvalidRequest(_) => 1,
            CliError::Engine(_)
            | CliError::Experiment(_)
            | CliError::Analytics(_)
            | CliError::Write { .. } => 2,
            CliError::VerifyFailed { .. } => 3,
        }
    }
}

/// Parse and dispatch; returns the process exit code.  Usable directly from
/// tests and the verification suite without spawning a process.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => sweep(args),
        Command::Verify(args) => run_verify(args),
    }
}

/// Load the config, fold command-line overrides into it (so the config hash
/// covers the effective settings), and resolve.
fn prepare(common: &CommonArgs, tweak: impl FnOnce(&mut ConfigFile)) -> Result<Resolved, CliError> {
    let (mut file, base_dir) = config::load(&common.config)?;
    if let Some(seed) = common.seed {
        file.seed = seed;
    }
    tweak(&mut file);
    let resolved = file.resolve(&base_dir)?;
    std::fs::create_dir_all(&common.out).map_err(|source| CliError::Write {
        path: common.out.display().to_string(),
        source,
    })?;
    Ok(resolved)
}

fn write_artifact(path: PathBuf, text: &str) -> Result<(), CliError> {
    report::write_text(&path, text).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Serialize)]
struct AnalyzeArtifact {
    config_hash: String,
    seed: u64,
    /// queueing correction assumed by the latency bounds; `analyze` never
    /// simulates, so this is the configured rate with an idle-system c = 0
    c_hat: f64,
    report: BoundReport,
}

fn analyze(args: CommonArgs) -> Result<(), CliError> {
    let r = prepare(&args, |_| {})?;
    let report = bound_report(&BoundContext {
        graph: &r.setup.graph,
        k: r.setup.tree.k(),
        h: r.setup.tree.height(),
        sink: r.setup.sink,
        beta: r.beta(),
        c_hat: 0.0,
        constants: r.constants,
        log_base: r.log_base,
        mixing_eps: r.mixing_eps,
    })?;
    let artifact = AnalyzeArtifact {
        config_hash: r.config_hash.clone(),
        seed: r.file.seed,
        c_hat: 0.0,
        report,
    };
    let json = report::to_canonical_json(&artifact);
    print!("{json}");
    write_artifact(args.out.join("analyze.json"), &json)
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let r = prepare(&args.common, |file| {
        if let Some(beta) = args.beta {
            file.run.beta = beta;
        }
        if let Some(slots) = args.slots {
            file.run.slots = Some(slots);
            file.run.rounds = None;
        }
        if let Some(rounds) = args.rounds {
            file.run.rounds = Some(rounds);
            file.run.slots = None;
        }
        if let Some(replicas) = args.replicas {
            file.experiment.replicas = replicas;
        }
    })?;
    let meta = CsvMeta {
        config_hash: r.config_hash.clone(),
        seed: r.file.seed,
    };

    let mut sim = r
        .setup
        .new_sim(r.arrival, r.setup.seed, r.rounds, r.slot_cap)?;
    let stop = match r.rounds {
        Some(l) => StopRule::RoundsCompleted(l),
        None => StopRule::Slots(r.slots),
    };
    sim.run(stop)?;
    let metrics = sim.metrics(r.burn_in);

    let out = &args.common.out;
    write_artifact(
        out.join("rounds.csv"),
        &report::round_events_csv(&meta, &metrics),
    )?;
    if args.audit {
        write_artifact(out.join("audit.csv"), &report::audit_csv(&meta, &metrics))?;
    }
    println!(
        "simulate: slots={} rounds_completed={} c_hat={} -> {}",
        metrics.slots_run,
        metrics.rounds_completed,
        sig12(metrics.c_hat),
        out.display()
    );

    // A round target makes the run a latency measurement; repeat it across
    // replicas so the per-round figures come with spread.
    if let Some(ell) = r.rounds {
        let latency = measure_latency(
            &r.setup,
            r.arrival,
            ell,
            r.probe.replicas,
            r.slot_cap,
            LATENCY_SALT,
            r.burn_in,
        )?;
        write_artifact(
            out.join("latency.csv"),
            &report::latency_csv(&meta, &latency),
        )?;
        println!(
            "latency: replicas={} mean_tau_bar={} mean_sojourn={} mean_c_hat={}",
            latency.replicas.len(),
            sig12(latency.mean_tau_bar),
            sig12(latency.mean_sojourn),
            sig12(latency.mean_c_hat)
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct BetaStarArtifact {
    config_hash: String,
    seed: u64,
    lo: f64,
    hi: f64,
    probes: usize,
}

fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let r = prepare(&args.common, |file| {
        if let Some(replicas) = args.replicas {
            file.experiment.replicas = replicas;
        }
        if !args.betas.is_empty() {
            file.experiment.betas = args.betas.clone();
        }
        if args.bisect {
            file.experiment.bisect = true;
        }
        if let Some(tol) = args.tol {
            file.experiment.tol = tol;
        }
    })?;
    let meta = CsvMeta {
        config_hash: r.config_hash.clone(),
        seed: r.file.seed,
    };
    let out = &args.common.out;

    let probes: Vec<StabilityProbe> = if r.bisect {
        let est = estimate_beta_star(&r.setup, &r.probe, r.tol)?;
        let artifact = BetaStarArtifact {
            config_hash: r.config_hash.clone(),
            seed: r.file.seed,
            lo: est.lo,
            hi: est.hi,
            probes: est.probes.len(),
        };
        write_artifact(
            out.join("beta_star.json"),
            &report::to_canonical_json(&artifact),
        )?;
        println!(
            "sweep: critical rate in [{}, {}] after {} probes",
            sig12(est.lo),
            sig12(est.hi),
            est.probes.len()
        );
        est.probes
    } else {
        if r.betas.is_empty() {
            return Err(CliError::InvalidRequest(
                "sweep needs a rate grid (experiment.betas / --betas) or \
                 bisection (experiment.bisect / --bisect)"
                    .into(),
            ));
        }
        let mut probes = Vec::with_capacity(r.betas.len());
        for (i, &beta) in r.betas.iter().enumerate() {
            let probe = stability_probe(&r.setup, beta, &r.probe, 1 + i as u64)?;
            println!("sweep: beta={} verdict={}", sig12(beta), probe.verdict);
            probes.push(probe);
        }
        probes
    };
    write_artifact(out.join("sweep.csv"), &report::sweep_csv(&meta, &probes))
}

fn run_verify(args: VerifyArgs) -> Result<(), CliError> {
    let results = if args.only.is_empty() {
        verify::run_all()
    } else {
        verify::run_selected(&args.only)
    };
    if results.is_empty() {
        return Err(CliError::InvalidRequest(
            "no matching verification criteria (valid ids: 1-9)".into(),
        ));
    }
    let mut failed = 0;
    for r in &results {
        println!("{}", r.line());
        if !r.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(CliError::VerifyFailed {
            failed,
            total: results.len(),
        });
    }
    println!("all {} criteria passed", results.len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(parts: &[&str]) -> Vec<String> {
        parts.iter().map(|s| s.to_string()).collect()
    }

    fn write_config(dir: &std::path::Path, body: &str) -> String {
        let path = dir.join("config.toml");
        std::fs::write(&path, body).unwrap();
        path.to_string_lossy().into_owned()
    }

    const SMALL: &str = "
seed = 5

[topology]
kind = \"cycle\"
n = 8

[schema]
complete = 2

[run]
beta = 0.05
slots = 2000
";

    #[test]
    fn analyze_writes_a_report_with_the_spectral_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            "
seed = 5

[topology]
kind = \"complete\"
n = 4

[schema]
complete = 2
",
        );
        let out = dir.path().join("out");
        let code = run(argv(&[
            "randcompute",
            "analyze",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
        ]));
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(out.join("analyze.json")).unwrap();
        // lambda_2 of the complete graph on 4 nodes is -1/3
        assert!(text.contains("-0.333333333333"), "{text}");
        assert!(text.contains("\"config_hash\""));
    }

    #[test]
    fn simulate_round_target_adds_the_latency_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), SMALL);
        let out = dir.path().join("out");
        let code = run(argv(&[
            "randcompute",
            "simulate",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--rounds",
            "20",
            "--audit",
        ]));
        assert_eq!(code, 0);
        for file in ["rounds.csv", "audit.csv", "latency.csv"] {
            assert!(out.join(file).exists(), "{file} missing");
        }
        let latency = std::fs::read_to_string(out.join("latency.csv")).unwrap();
        assert!(latency.starts_with("# config_hash="));
        assert!(latency.contains("replica,ell,tau_app,tau_fK,tau_bar"));
    }

    #[test]
    fn seed_override_changes_the_embedded_hash() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), SMALL);
        let mut hashes = Vec::new();
        for seed in ["5", "6"] {
            let out = dir.path().join(format!("out{seed}"));
            let code = run(argv(&[
                "randcompute",
                "simulate",
                "--config",
                &cfg,
                "--seed",
                seed,
                "--out",
                out.to_str().unwrap(),
            ]));
            assert_eq!(code, 0);
            let head = std::fs::read_to_string(out.join("rounds.csv")).unwrap();
            hashes.push(head.lines().next().unwrap().to_string());
        }
        assert_ne!(hashes[0], hashes[1]);
        assert!(hashes[1].ends_with("seed=6"));
    }

    #[test]
    fn sweep_without_a_grid_or_bisection_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), SMALL);
        let code = run(argv(&[
            "randcompute",
            "sweep",
            "--config",
            &cfg,
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ]));
        assert_eq!(code, 1);
    }

    #[test]
    fn unknown_config_keys_exit_with_validation_failure() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), "[topology]\nkind = \"cycle\"\nn = 8\nspokes = 3\n");
        let code = run(argv(&["randcompute", "analyze", "--config", &cfg]));
        assert_eq!(code, 1);
    }

    #[test]
    fn parse_errors_exit_one_and_help_exits_zero() {
        assert_eq!(run(argv(&["randcompute", "frobnicate"])), 1);
        assert_eq!(run(argv(&["randcompute", "--help"])), 0);
        assert_eq!(run(argv(&["randcompute", "simulate"])), 1); // --config required
    }
}

//! `shieldlab`: builds transverse-field Ising lattices from scenario files,
//! runs the shielding checks and writes CSV reports.

mod commands;
mod examples;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use shieldlab::csvfmt::sci;
use shieldlab::random::oracle_suite;
use shieldlab::shielding::{DEFAULT_EPS, GROUND_TOL};
use shieldlab::spectral::DEFAULT_GAP_TOL;

use commands::{table, Edits};
use report::RunReport;

#[derive(Parser)]
#[command(name = "shieldlab", version, about = "Shielding checks for transverse-field Ising lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for CSV reports and summary.txt.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Scenario edit such as `a=0.8`, `hx.0=0.3`, `J.1.2=-1`, `run.beta=INF`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Inverse temperature, or INF for the ground space.
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<String>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "SHIELDLAB_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ScenarioArg {
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Build the Hamiltonian and check the partition.
    Build(ScenarioArg),
    /// Full spectrum and ground-space summary.
    Spectrum(ScenarioArg),
    /// Reduced state on Y = S ∪ B at the scenario's beta.
    Reduce(ScenarioArg),
    /// Sweep one parameter and compare reduced states on Y.
    ShieldingScan(ScenarioArg),
    /// Exact classical ground set of a zero-field lattice.
    ClassicalGs(ScenarioArg),
    /// Run one of the built-in examples.
    PaperExample {
        /// theorem1-chain3, fig4-foursite, chain5-correlations, pentagon-pair, pentagon-n, ladder or quasichain.
        name: String,
    },
    /// Random lattices checked against the two-sector ground-state prediction.
    OracleSuite {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
    },
}

fn run(cli: &Cli, report: &mut RunReport) -> Result<()> {
    let edits = Edits { overrides: &cli.overrides, beta: cli.beta.as_deref() };
    let scenario_cmd = |arg: &ScenarioArg, f: fn(&shieldlab::scenario::Scenario, &mut RunReport) -> Result<()>, report: &mut RunReport| {
        let sc = commands::load(&arg.scenario, &edits)?;
        commands::check_sweep_path(&sc)?;
        f(&sc, report)
    };
    match &cli.command {
        Command::Build(a) => scenario_cmd(a, commands::build, report),
        Command::Spectrum(a) => scenario_cmd(a, commands::spectrum, report),
        Command::Reduce(a) => scenario_cmd(a, commands::reduce, report),
        Command::ShieldingScan(a) => scenario_cmd(a, commands::shielding_scan, report),
        Command::ClassicalGs(a) => scenario_cmd(a, commands::classical_gs, report),
        Command::PaperExample { name } => examples::run(name, &edits, report),
        Command::OracleSuite { seed, count } => {
            let r = oracle_suite(*seed, *count as usize, DEFAULT_GAP_TOL, DEFAULT_EPS, GROUND_TOL)?;
            let qualifying = r.qualifying().count();
            let unaligned = r.entries.len() - qualifying;
            report.line(format!("seed: {seed}, instances: {}", r.entries.len()));
            report.line(format!(
                "condition9 holds: {qualifying}, fails: {unaligned} ({:.1}%)",
                100.0 * unaligned as f64 / r.entries.len() as f64
            ));
            report.line(format!("max distance to prediction = {}", sci(r.max_distance())));
            report.contract("every aligned instance matches the prediction < 1e-8", r.pass());
            let rows: Vec<Vec<String>> = r
                .entries
                .iter()
                .map(|e| {
                    vec![
                        e.index.to_string(),
                        e.n_sites.to_string(),
                        e.interface_len.to_string(),
                        if e.outcome.alignment.pass { "pass".into() } else { "fail".into() },
                        e.outcome.alignment.sector_star.as_ref().map(|s| s.label()).unwrap_or_default(),
                        e.outcome.distance.map(sci).unwrap_or_default(),
                    ]
                })
                .collect();
            report.file("oracle_suite.csv", table(&["index", "n_sites", "interface_len", "condition9", "sector", "distance"], &rows));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: cannot start {j} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let mut report = RunReport::default();
    let outcome = run(&cli, &mut report).and_then(|()| report.emit(cli.out.as_deref()).context("writing reports"));
    match outcome {
        Ok(()) if report.passed() => ExitCode::SUCCESS,
        Ok(()) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

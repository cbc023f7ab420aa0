use std::collections::HashSet;
use std::path::PathBuf;
use std::process::{Child, Command, ExitCode};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use ipc_core::harness::config::load_config;
use ipc_core::harness::experiment::{feascheck, measure_point, read_point, run_experiment, validate};

/// Inexact proximal methods for weakly convex constrained problems.
#[derive(Parser)]
#[command(name = "ipc", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run experiments and write trace CSVs.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Run up to N configurations at once, each in its own process.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Feasibility restoration from the configured starting point.
    Feascheck { config: PathBuf },
    /// Stationarity meter at a point read from a file.
    Measure {
        config: PathBuf,
        #[arg(long)]
        point: PathBuf,
    },
    /// Spot-check the declared constants of the configured problem.
    Validate { config: PathBuf },
}

fn run_one(path: &PathBuf) -> Result<()> {
    let cfg = load_config(path).with_context(|| format!("loading {}", path.display()))?;
    let s = run_experiment(&cfg).with_context(|| format!("running {}", path.display()))?;
    for w in &s.warnings {
        eprintln!("warning: {w}");
    }
    let last = s.rows.last().expect("trace has a row per outer iteration");
    println!(
        "{}: T = {}, eps_hat = {}, f = {}, g = {}, data passes = {}, wrote {}",
        cfg.name,
        s.resolved.outer,
        s.resolved.eps_hat,
        last.f_value,
        last.g_value.map(|g| g.to_string()).unwrap_or_else(|| "-".into()),
        last.data_passes,
        s.output.display()
    );
    Ok(())
}

fn run_batch(configs: &[PathBuf], jobs: usize) -> Result<()> {
    let mut outputs = HashSet::new();
    for c in configs {
        let cfg = load_config(c).with_context(|| format!("loading {}", c.display()))?;
        if !outputs.insert(cfg.output_path()) {
            bail!("{} writes to {}, which another configuration also uses", c.display(), cfg.output_path().display());
        }
    }
    let exe = std::env::current_exe().context("locating the ipc executable")?;
    let mut pending = configs.iter();
    let mut running: Vec<(PathBuf, Child)> = Vec::new();
    let mut failed = Vec::new();
    loop {
        while running.len() < jobs.max(1) {
            let Some(c) = pending.next() else { break };
            let child = Command::new(&exe)
                .arg("run")
                .arg(c)
                .spawn()
                .with_context(|| format!("starting a run for {}", c.display()))?;
            running.push((c.clone(), child));
        }
        if running.is_empty() {
            break;
        }
        let (c, mut child) = running.remove(0);
        if !child.wait()?.success() {
            failed.push(c);
        }
    }
    if !failed.is_empty() {
        let names: Vec<String> = failed.iter().map(|p| p.display().to_string()).collect();
        bail!("{} run(s) failed: {}", failed.len(), names.join(", "));
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Run { configs, jobs } => {
            if configs.len() == 1 {
                run_one(&configs[0])
            } else if jobs <= 1 {
                configs.iter().try_for_each(run_one)
            } else {
                run_batch(&configs, jobs)
            }
        }
        Cmd::Feascheck { config } => {
            let cfg = load_config(&config)?;
            let r = feascheck(&cfg)?;
            println!("status: {}", r.status);
            println!("g: {}", r.g_value);
            println!("oracle_calls: {}", r.oracle_calls);
            let pt: Vec<String> = r.point.iter().map(|v| v.to_string()).collect();
            println!("point: {}", pt.join(","));
            Ok(())
        }
        Cmd::Measure { config, point } => {
            let cfg = load_config(&config)?;
            let x = read_point(&point).with_context(|| format!("reading {}", point.display()))?;
            let r = measure_point(&cfg, &x)?;
            println!("distance_estimate: {}", r.distance_estimate);
            println!("subproblem_accuracy: {}", r.subproblem_accuracy);
            println!("slack_bound: {}", r.slack_bound);
            if let Some(g) = r.g_at_candidate {
                println!("g: {g}");
            }
            if let Some(l) = r.lambda_estimate {
                println!("lambda_estimate: {l}");
            }
            println!("iterations: {}", r.iterations);
            Ok(())
        }
        Cmd::Validate { config } => {
            let cfg = load_config(&config)?;
            let r = validate(&cfg)?;
            print!("{r}");
            if !r.passed() {
                bail!("{} violation(s)", r.violations.len());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

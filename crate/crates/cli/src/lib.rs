//! Command-line experiments for constrained-GP Cox-process inference: simulate event
//! patterns, fit posterior intensities, and score them against a known truth.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{EvaluateConfig, FitConfig, Settings, SimulateConfig};
pub use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "cgpcox", version, about = "Cox-process intensity inference with constrained Gaussian processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate Poisson event patterns from a known intensity.
    Simulate(SimulateArgs),
    /// Run the Metropolis–Hastings sampler and write a posterior intensity summary.
    Fit(Box<FitArgs>),
    /// Score posterior summaries against a known intensity.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat `key = value` config file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra `key=value` override; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct IntensityArgs {
    /// toy1, toy2, toy3, weibull, gamma, constant or table.
    #[arg(long)]
    pub intensity: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    /// Rate of the constant intensity.
    #[arg(long)]
    pub rate: Option<String>,
    /// CSV with columns x1..xd,value on a full equispaced grid.
    #[arg(long)]
    pub table: Option<String>,
    /// Box as `a:b[,a:b…]`.
    #[arg(long)]
    pub domain: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub intensity: IntensityArgs,
    /// Number of independent observations.
    #[arg(long)]
    pub n_obs: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub lambda_max: Option<String>,
    /// Events CSV to write.
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub replicates: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    /// Events CSV (`obs,x1[,x2…]`).
    #[arg(long)]
    pub events: Option<String>,
    #[arg(long)]
    pub n_obs: Option<String>,
    #[arg(long)]
    pub domain: Option<String>,
    /// Knots per dimension, or `auto`.
    #[arg(long)]
    pub m: Option<String>,
    /// Comma-separated list such as `nonnegative,nondecreasing` or `bounded(0,5)`.
    #[arg(long)]
    pub constraints: Option<String>,
    #[arg(long)]
    pub variance: Option<String>,
    #[arg(long)]
    pub lengthscales: Option<String>,
    /// Estimate the kernel hyperparameters instead of using fixed values.
    #[arg(long)]
    pub estimate: bool,
    #[arg(long)]
    pub variance_bounds: Option<String>,
    #[arg(long)]
    pub lengthscale_bounds: Option<String>,
    #[arg(long)]
    pub budget: Option<String>,
    #[arg(long)]
    pub n_prior: Option<String>,
    #[arg(long)]
    pub eta: Option<String>,
    #[arg(long)]
    pub samples: Option<String>,
    #[arg(long)]
    pub burnin: Option<String>,
    #[arg(long)]
    pub orthant_mc: Option<String>,
    #[arg(long)]
    pub proposal_steps: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub out_dir: Option<String>,
    /// Also write the retained coefficient samples.
    #[arg(long)]
    pub chain: bool,
    #[arg(long)]
    pub eval_points: Option<String>,
    #[arg(long)]
    pub replicates: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub intensity: IntensityArgs,
    /// A single summary CSV.
    #[arg(long)]
    pub summary: Option<String>,
    /// Directory holding `summary.csv` files (itself or one level down).
    #[arg(long)]
    pub summary_dir: Option<String>,
    /// Metrics CSV to write.
    #[arg(long)]
    pub out: Option<String>,
}

fn settings(common: &Common, flags: Vec<(&str, Option<String>)>) -> CliResult<Settings> {
    let mut s = match &common.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    for kv in &common.set {
        let (k, v) =
            kv.split_once('=').ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        s.set(k, v.trim());
    }
    for (k, v) in flags {
        if let Some(v) = v {
            s.set(k, v);
        }
    }
    Ok(s)
}

impl IntensityArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("intensity", self.intensity.clone()),
            ("alpha", self.alpha.clone()),
            ("beta", self.beta.clone()),
            ("rate", self.rate.clone()),
            ("table", self.table.clone()),
            ("domain", self.domain.clone()),
        ]
    }
}

fn bool_flag(on: bool) -> Option<String> {
    on.then(|| "true".to_string())
}

/// Runs one command, printing a short report to stdout.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => {
            let mut flags = a.intensity.flags();
            flags.extend([
                ("n_obs", a.n_obs),
                ("seed", a.seed),
                ("lambda_max", a.lambda_max),
                ("out", a.out),
                ("replicates", a.replicates),
            ]);
            let cfg = SimulateConfig::from_settings(&settings(&a.common, flags)?)?;
            for (path, pattern) in commands::run_simulate(&cfg)? {
                let counts: Vec<String> = pattern.counts().iter().map(usize::to_string).collect();
                println!(
                    "{}: {} observations, {} events; counts per observation: {}",
                    path.display(),
                    pattern.n_observations(),
                    pattern.total_events(),
                    counts.join(",")
                );
            }
        }
        Command::Fit(a) => {
            let flags = vec![
                ("events", a.events),
                ("n_obs", a.n_obs),
                ("domain", a.domain),
                ("m", a.m),
                ("constraints", a.constraints),
                ("variance", a.variance),
                ("lengthscales", a.lengthscales),
                ("estimate", bool_flag(a.estimate)),
                ("variance_bounds", a.variance_bounds),
                ("lengthscale_bounds", a.lengthscale_bounds),
                ("budget", a.budget),
                ("n_prior", a.n_prior),
                ("eta", a.eta),
                ("samples", a.samples),
                ("burnin", a.burnin),
                ("orthant_mc", a.orthant_mc),
                ("proposal_steps", a.proposal_steps),
                ("seed", a.seed),
                ("out_dir", a.out_dir),
                ("chain", bool_flag(a.chain)),
                ("eval_points", a.eval_points),
                ("replicates", a.replicates),
            ];
            let cfg = FitConfig::from_settings(&settings(&a.common, flags)?)?;
            for o in commands::run_fit(&cfg)? {
                println!(
                    "{}: variance {:.6}, lengthscales {:?}, acceptance {:.3}, min ESS {:.1}, {:.2}s",
                    o.dir.display(),
                    cgpcox::kernel::Kernel::variance(&o.params),
                    o.params.lengthscales(),
                    o.acceptance_rate,
                    o.ess_min,
                    o.wall_time
                );
            }
        }
        Command::Evaluate(a) => {
            let mut flags = a.intensity.flags();
            flags.extend([("summary", a.summary), ("summary_dir", a.summary_dir), ("out", a.out)]);
            let cfg = EvaluateConfig::from_settings(&settings(&a.common, flags)?)?;
            let reports = commands::run_evaluate(&cfg)?;
            let q2: Vec<f64> = reports.iter().map(|r| r.q2).collect();
            let (m, sd) = cgpcox::metrics::mean_and_sd(&q2);
            println!("Q2 over {} summaries: {:.4} ± {:.4} ({})", reports.len(), m, sd, cfg.out.display());
        }
    }
    Ok(())
}

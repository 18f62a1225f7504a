//! The `simulate`, `fit` and `evaluate` commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use cgpcox::constraints::build_constraint_system;
use cgpcox::cox::{estimate_hyperparams, mh_infer, posterior_intensity};
use cgpcox::kernel::Kernel;
use cgpcox::metrics::{acceptance_rate, ess_min, mean_and_sd, q_squared, smse, MetricReport, Window};
use cgpcox::point_process::simulate_poisson;
use cgpcox::rng::substream;
use cgpcox::{KernelParams, PointPattern};
use rayon::prelude::*;

use crate::config::{EvaluateConfig, FitConfig, KernelChoice, KnotChoice, SimulateConfig};
use crate::error::{CliError, CliResult};
use crate::io::{
    fmt_num, read_events, read_first_row, read_summary, write_chain, write_events, write_rows, write_summary,
};

const SUMMARY_LEVELS: [f64; 3] = [0.05, 0.5, 0.95];

/// Seed for replicate `r` of `k`: the base seed itself when there is a single replicate.
fn replicate_seed(seed: u64, r: usize, k: usize) -> u64 {
    if k == 1 {
        seed
    } else {
        substream(seed, r as u64)
    }
}

fn replicate_path(path: &Path, r: usize, k: usize) -> PathBuf {
    if k == 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("events");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_rep{}.{ext}", r + 1))
}

fn check_replicates(k: usize) -> CliResult<()> {
    if k == 0 {
        return Err(CliError::Config("replicates must be at least 1".into()));
    }
    Ok(())
}

/// Simulates event files; returns the written paths with their patterns.
pub fn run_simulate(cfg: &SimulateConfig) -> CliResult<Vec<(PathBuf, PointPattern)>> {
    check_replicates(cfg.replicates)?;
    let spec = &cfg.intensity;
    let lambda_max = match cfg.lambda_max {
        Some(v) => v,
        None => spec.default_lambda_max()?,
    };
    let domain = spec.simulation_domain();
    let k = cfg.replicates;
    let results: Vec<CliResult<(PathBuf, PointPattern)>> = (0..k)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(cfg.seed, r, k);
            let pattern = simulate_poisson(|x| spec.eval(x), &domain, lambda_max, cfg.n_obs, seed)?;
            let path = replicate_path(&cfg.out, r, k);
            write_events(&path, &pattern, spec.dim())?;
            Ok((path, pattern))
        })
        .collect();
    results.into_iter().collect()
}

/// Per-replicate outcome of `fit`.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub dir: PathBuf,
    pub params: KernelParams,
    pub acceptance_rate: f64,
    pub ess_min: f64,
    pub wall_time: f64,
}

/// Equispaced evaluation points including the domain ends, last dimension fastest.
pub fn evaluation_points(domain: &[(f64, f64)], counts: &[usize]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for (&(a, b), &n) in domain.iter().zip(counts) {
        let axis: Vec<f64> =
            (0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect();
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

fn lengthscale_centre(bounds: &[(f64, f64)]) -> Vec<f64> {
    bounds.iter().map(|(lo, hi)| (lo * hi).sqrt()).collect()
}

pub fn run_fit(cfg: &FitConfig) -> CliResult<Vec<FitOutcome>> {
    check_replicates(cfg.replicates)?;
    let (pattern, dim) = read_events(&cfg.events, cfg.n_obs)?;
    if dim != cfg.domain.len() {
        return Err(CliError::Config(format!(
            "events are {dim}-dimensional but the domain has {} intervals",
            cfg.domain.len()
        )));
    }
    let (params, grid) = match &cfg.kernel {
        KernelChoice::Fixed(p) => (p.clone(), cfg.grid(p.lengthscales())?),
        KernelChoice::Estimate(search) => {
            let grid = cfg.grid(&lengthscale_centre(&search.lengthscales))?;
            let system = build_constraint_system(&cfg.constraints, &grid)?;
            let p = estimate_hyperparams(&pattern, &grid, &system, search, substream(cfg.mh.seed, u64::MAX))?;
            let grid = match cfg.knots {
                KnotChoice::Auto => cfg.grid(p.lengthscales())?,
                KnotChoice::Fixed(_) => grid,
            };
            (p, grid)
        }
    };
    let system = build_constraint_system(&cfg.constraints, &grid)?;
    let query = evaluation_points(&cfg.domain, &cfg.eval_points);
    let k = cfg.replicates;

    let results: Vec<CliResult<FitOutcome>> = (0..k)
        .into_par_iter()
        .map(|r| {
            let mut mh = cfg.mh.clone();
            mh.seed = replicate_seed(cfg.mh.seed, r, k);
            let dir = if k == 1 { cfg.out_dir.clone() } else { cfg.out_dir.join(format!("rep{}", r + 1)) };
            let start = Instant::now();
            let chain = mh_infer(&pattern, &grid, &system, &params, &mh)?;
            let wall_time = start.elapsed().as_secs_f64();
            let summary = posterior_intensity(&chain, &query, &SUMMARY_LEVELS)?;
            let rate = acceptance_rate(&chain, Window::All)?;
            let rate_post = acceptance_rate(&chain, Window::PostBurnIn)?;
            let ess = if chain.samples.len() >= 10 { ess_min(&chain)? } else { f64::NAN };

            write_summary(&dir.join("summary.csv"), &summary)?;
            if cfg.write_chain {
                write_chain(&dir.join("chain.csv"), &chain)?;
            }
            write_rows(
                &dir.join("diagnostics.csv"),
                &["acceptance_rate", "acceptance_rate_post_burnin", "ess_min", "variance", "lengthscales", "m", "seed"],
                &[vec![
                    fmt_num(rate),
                    fmt_num(rate_post),
                    fmt_num(ess),
                    fmt_num(params.variance()),
                    join(params.lengthscales().iter().map(|&l| fmt_num(l))),
                    join(grid.counts().iter().map(usize::to_string)),
                    mh.seed.to_string(),
                ]],
            )?;
            // Timing is kept apart so the other outputs are reproducible byte for byte.
            write_rows(
                &dir.join("timing.csv"),
                &["wall_time_s", "ms_per_sample"],
                &[vec![format!("{wall_time:.3}"), format!("{:.3}", 1e3 * wall_time / chain.samples.len() as f64)]],
            )?;
            Ok(FitOutcome { dir, params: params.clone(), acceptance_rate: rate, ess_min: ess, wall_time })
        })
        .collect();
    results.into_iter().collect()
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(";")
}

/// Summary files to score: the given file, or every `summary.csv` in the directory and its
/// immediate subdirectories, sorted by path.
fn summary_files(cfg: &EvaluateConfig) -> CliResult<Vec<PathBuf>> {
    if let Some(p) = &cfg.summary {
        return Ok(vec![p.clone()]);
    }
    let dir = cfg.summary_dir.as_ref().expect("validated in config");
    let mut files = Vec::new();
    let direct = dir.join("summary.csv");
    if direct.is_file() {
        files.push(direct);
    }
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let candidate = entry.path().join("summary.csv");
        if candidate.is_file() {
            files.push(candidate);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::Config(format!("no summary.csv found under {}", dir.display())));
    }
    Ok(files)
}

/// Scores summaries against the true intensity and writes one row per file, plus mean and
/// standard deviation rows when there are several. Points where the truth is infinite
/// (hazard singularities) are left out.
pub fn run_evaluate(cfg: &EvaluateConfig) -> CliResult<Vec<MetricReport>> {
    let files = summary_files(cfg)?;
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for file in &files {
        let (points, mean) = read_summary(file)?;
        let mut truth = Vec::with_capacity(points.len());
        let mut estimate = Vec::with_capacity(points.len());
        for (x, m) in points.iter().zip(&mean) {
            let t = cfg.intensity.eval(x)?;
            if t.is_finite() {
                truth.push(t);
                estimate.push(*m);
            }
        }
        let diag = file.with_file_name("diagnostics.csv");
        let (acc, ess) = if diag.is_file() {
            let v = read_first_row(&diag, &["acceptance_rate", "ess_min"])?;
            (v[0], v[1])
        } else {
            (f64::NAN, f64::NAN)
        };
        let report = MetricReport {
            q2: q_squared(&truth, &estimate)?,
            smse: smse(&truth, &estimate)?,
            acceptance_rate: acc,
            ess_min: ess,
        };
        rows.push(metric_row(&file.display().to_string(), &report));
        reports.push(report);
    }
    if reports.len() > 1 {
        let col = |f: fn(&MetricReport) -> f64| mean_and_sd(&reports.iter().map(f).collect::<Vec<_>>());
        let stats = [col(|r| r.q2), col(|r| r.smse), col(|r| r.acceptance_rate), col(|r| r.ess_min)];
        rows.push(std::iter::once("mean".to_string()).chain(stats.iter().map(|s| fmt_num(s.0))).collect());
        rows.push(std::iter::once("sd".to_string()).chain(stats.iter().map(|s| fmt_num(s.1))).collect());
    }
    write_rows(&cfg.out, &["replicate", "q2", "smse", "acceptance_rate", "ess_min"], &rows)?;
    Ok(reports)
}

fn metric_row(name: &str, r: &MetricReport) -> Vec<String> {
    vec![name.to_string(), fmt_num(r.q2), fmt_num(r.smse), fmt_num(r.acceptance_rate), fmt_num(r.ess_min)]
}

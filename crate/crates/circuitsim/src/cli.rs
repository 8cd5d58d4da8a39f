//! Command line entry points: `run` for one simulation, `sweep` for a
//! two-policy ratio heatmap over a grid, `compare` for per-policy stats
//! across distributions and degrees. Grid cells execute in a worker pool;
//! a failing cell is recorded in its row and the rest of the grid
//! continues.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{
    chain_seed, load_grid_config, load_run_config, resolve_distribution, GridConfig,
};
use crate::engine::{build_workload_trace, compare, run_on_trace, EngineOptions, PolicyKind};
use crate::report::{
    mean_std, run_summary_record, write_compare, write_run_summary, write_series, write_sweep,
    write_sweep_matrices, CompareRow, SweepRow, RUN_SUMMARY_HEADER,
};

#[derive(Parser)]
#[command(
    name = "circuitsim",
    version,
    about = "Flow-level simulator for hybrid electrical/optical datacenter fabrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Simulate one configuration and write a summary row.
    Run(CommonArgs),
    /// Grid sweep emitting the ratio of two policies' optical throughput.
    Sweep(CommonArgs),
    /// Per-policy statistics across distributions, rates and degrees.
    Compare(CommonArgs),
}

#[derive(Args)]
pub struct CommonArgs {
    /// TOML config file; every field has a default when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for CSV output.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override the config's seed (run) or base_seed (sweep/compare).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for grid cells; defaults to all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also write the per-slot series CSV (run only).
    #[arg(long)]
    pub series: bool,
    /// Disable the first-slot capacity haircut on reconfigured circuits.
    #[arg(long)]
    pub no_reconf_penalty: bool,
}

impl CommonArgs {
    fn engine_opts(&self) -> EngineOptions {
        EngineOptions {
            reconf_penalty: !self.no_reconf_penalty,
            record_series: self.series,
            validate_each_slot: true,
        }
    }

    fn pool(&self) -> anyhow::Result<rayon::ThreadPool> {
        Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.unwrap_or(0))
            .build()?)
    }
}

pub fn entry() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run(args) => cmd_run(&args),
        Cmd::Sweep(args) => cmd_sweep(&args),
        Cmd::Compare(args) => cmd_compare(&args),
    }
}

fn write_resolved<T: serde::Serialize>(out: &Path, cfg: &T) -> anyhow::Result<()> {
    let text = toml::to_string_pretty(cfg).context("serializing resolved config")?;
    std::fs::write(out.join("config.resolved.toml"), text)?;
    Ok(())
}

pub fn cmd_run(args: &CommonArgs) -> anyhow::Result<()> {
    let mut cfg = load_run_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let run = cfg.resolve()?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_resolved(&args.out, &cfg)?;

    let opts = args.engine_opts();
    let trace = build_workload_trace(&run.workload, &run.distribution, &run.policy.params, run.horizon_slots);
    let report = run_on_trace(&trace, &run.policy, &opts);

    write_run_summary(&args.out.join("run_summary.csv"), &run, opts.reconf_penalty, &report)?;
    if let Some(series) = &report.series {
        write_series(&args.out.join("run_series.csv"), series)?;
    }
    println!("{}", RUN_SUMMARY_HEADER.join(","));
    println!("{}", run_summary_record(&run, opts.reconf_penalty, &report).join(","));
    Ok(())
}

/// Flatten a panic payload into the row's error column.
fn panic_text(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".to_string()
    }
}

fn sweep_cell(
    grid: &GridConfig,
    opts: &EngineOptions,
    d: usize,
    m: usize,
    rt: usize,
    kd: usize,
) -> SweepRow {
    let mut row = SweepRow {
        distribution: grid.distributions[d].to_ascii_lowercase(),
        mean_flow_size: grid.mean_flow_sizes[m],
        host_rate_bps: grid.host_rates[rt],
        degree: grid.degrees[kd],
        numerator_policy: grid.policies[0],
        denominator_policy: grid.policies[1],
        numerator_mean_ratio: None,
        denominator_mean_ratio: None,
        ratio: None,
        repeats: grid.repeats,
        error: None,
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| -> anyhow::Result<(f64, f64)> {
        let policies = [
            grid.cell_policy(grid.policies[0], d, grid.degrees[kd])?,
            grid.cell_policy(grid.policies[1], d, grid.degrees[kd])?,
        ];
        let dist = resolve_distribution(&grid.distributions[d], grid.mean_flow_sizes[m], None)?;
        let mut sums = (0.0, 0.0);
        for rep in 0..grid.repeats {
            let seed = chain_seed(
                grid.base_seed,
                &[d as u64, m as u64, rt as u64, kd as u64, rep as u64],
            );
            let mut workload = grid.workload.resolve(
                policies[0].params.n,
                policies[0].params.slot_len,
                seed,
                grid.host_rates[rt],
            );
            workload.mean_flow_size = dist.analytic_mean();
            workload.validate()?;
            let trace =
                build_workload_trace(&workload, &dist, &policies[0].params, grid.horizon_slots);
            let reports = compare(&trace, &policies, opts);
            sums.0 += reports[0].optical_throughput_ratio;
            sums.1 += reports[1].optical_throughput_ratio;
        }
        Ok((sums.0 / grid.repeats as f64, sums.1 / grid.repeats as f64))
    }));
    match outcome {
        Ok(Ok((num_mean, den_mean))) => {
            row.numerator_mean_ratio = Some(num_mean);
            row.denominator_mean_ratio = Some(den_mean);
            if den_mean > 0.0 {
                row.ratio = Some(num_mean / den_mean);
            } else {
                row.error = Some("denominator policy served zero optical bytes".to_string());
            }
        }
        Ok(Err(e)) => row.error = Some(format!("{e:#}")),
        Err(payload) => row.error = Some(panic_text(payload)),
    }
    row
}

/// All sweep rows for a grid, computed in the current rayon context.
pub fn sweep_rows(grid: &GridConfig, opts: &EngineOptions) -> anyhow::Result<Vec<SweepRow>> {
    if grid.policies.len() != 2 {
        bail!(
            "field policies: sweep needs exactly two (numerator, denominator), got {}",
            grid.policies.len()
        );
    }
    let mut cells = Vec::new();
    for d in 0..grid.distributions.len() {
        for m in 0..grid.mean_flow_sizes.len() {
            for rt in 0..grid.host_rates.len() {
                for kd in 0..grid.degrees.len() {
                    cells.push((d, m, rt, kd));
                }
            }
        }
    }
    Ok(cells
        .par_iter()
        .map(|&(d, m, rt, kd)| sweep_cell(grid, opts, d, m, rt, kd))
        .collect())
}

pub fn cmd_sweep(args: &CommonArgs) -> anyhow::Result<()> {
    let mut grid = load_grid_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        grid.base_seed = seed;
    }
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_resolved(&args.out, &grid)?;

    let opts = args.engine_opts();
    let rows = args.pool()?.install(|| sweep_rows(&grid, &opts))?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();

    let long = args.out.join("sweep_heatmap.csv");
    write_sweep(&long, &rows)?;
    let matrices = write_sweep_matrices(&args.out, &rows)?;
    println!("wrote {} ({} cells, {} failed)", long.display(), rows.len(), failed);
    for m in matrices {
        println!("wrote {}", m.display());
    }
    Ok(())
}

fn compare_cell(
    grid: &GridConfig,
    opts: &EngineOptions,
    d: usize,
    rt: usize,
    kd: usize,
) -> Vec<CompareRow> {
    let degree = grid.degrees[kd];
    let blank = |policy: PolicyKind| CompareRow {
        distribution: grid.distributions[d].to_ascii_lowercase(),
        mean_flow_size: 0.0,
        host_rate_bps: grid.host_rates[rt],
        degree,
        policy,
        alpha: None,
        repeats: grid.repeats,
        mean_optical_ratio: None,
        std_optical_ratio: None,
        mean_reconfig_ratio: None,
        std_reconfig_ratio: None,
        mean_optical_bytes: None,
        mean_total_bytes: None,
        error: None,
    };

    let outcome = catch_unwind(AssertUnwindSafe(|| -> anyhow::Result<Vec<CompareRow>> {
        let mean = *grid.aligned("mean_flow_sizes", &grid.mean_flow_sizes, d)?;
        let dist = resolve_distribution(&grid.distributions[d], mean, None)?;
        let policies = grid
            .policies
            .iter()
            .map(|&kind| grid.cell_policy(kind, d, degree))
            .collect::<Result<Vec<_>, _>>()?;

        let mut per_policy: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> =
            vec![Default::default(); policies.len()];
        for rep in 0..grid.repeats {
            let seed = chain_seed(grid.base_seed, &[d as u64, rt as u64, kd as u64, rep as u64]);
            let mut workload = grid.workload.resolve(
                policies[0].params.n,
                policies[0].params.slot_len,
                seed,
                grid.host_rates[rt],
            );
            workload.mean_flow_size = dist.analytic_mean();
            workload.validate()?;
            let trace = build_workload_trace(&workload, &dist, &policies[0].params, grid.horizon_slots);
            for (acc, report) in per_policy.iter_mut().zip(compare(&trace, &policies, opts)) {
                acc.0.push(report.optical_throughput_ratio);
                acc.1.push(report.reconfig_ratio_per_slot);
                acc.2.push(report.optical_bytes as f64);
                acc.3.push(report.total_bytes as f64);
            }
        }

        let mut rows = Vec::new();
        for (policy, acc) in policies.iter().zip(&per_policy) {
            let (mean_ratio, std_ratio) = mean_std(&acc.0);
            let (mean_reconf, std_reconf) = mean_std(&acc.1);
            rows.push(CompareRow {
                mean_flow_size: dist.analytic_mean(),
                alpha: (policy.kind == PolicyKind::Hybrid).then_some(policy.params.alpha),
                mean_optical_ratio: Some(mean_ratio),
                std_optical_ratio: Some(std_ratio),
                mean_reconfig_ratio: Some(mean_reconf),
                std_reconfig_ratio: Some(std_reconf),
                mean_optical_bytes: Some(mean_std(&acc.2).0),
                mean_total_bytes: Some(mean_std(&acc.3).0),
                ..blank(policy.kind)
            });
        }
        Ok(rows)
    }));
    match outcome {
        Ok(Ok(rows)) => rows,
        Ok(Err(e)) => {
            let msg = format!("{e:#}");
            grid.policies
                .iter()
                .map(|&p| CompareRow { error: Some(msg.clone()), ..blank(p) })
                .collect()
        }
        Err(payload) => {
            let msg = panic_text(payload);
            grid.policies
                .iter()
                .map(|&p| CompareRow { error: Some(msg.clone()), ..blank(p) })
                .collect()
        }
    }
}

/// All compare rows for a grid, computed in the current rayon context.
pub fn compare_rows(grid: &GridConfig, opts: &EngineOptions) -> anyhow::Result<Vec<CompareRow>> {
    let mut cells = Vec::new();
    for d in 0..grid.distributions.len() {
        for rt in 0..grid.host_rates.len() {
            for kd in 0..grid.degrees.len() {
                cells.push((d, rt, kd));
            }
        }
    }
    Ok(cells
        .par_iter()
        .flat_map(|&(d, rt, kd)| compare_cell(grid, opts, d, rt, kd))
        .collect())
}

pub fn cmd_compare(args: &CommonArgs) -> anyhow::Result<()> {
    let mut grid = load_grid_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        grid.base_seed = seed;
    }
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_resolved(&args.out, &grid)?;

    let opts = args.engine_opts();
    let rows = args.pool()?.install(|| compare_rows(&grid, &opts))?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();

    let path = args.out.join("compare_table.csv");
    write_compare(&path, &rows)?;
    println!("wrote {} ({} rows, {} failed)", path.display(), rows.len(), failed);
    Ok(())
}

//! CSV output with fixed, documented schemas. Rows are sorted
//! deterministically and every file carries enough of the resolved
//! configuration to reproduce it.

use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::config::ResolvedRun;
use crate::engine::{MetricsReport, PolicyKind, SlotSeries};

pub const RUN_SUMMARY_HEADER: [&str; 30] = [
    "policy",
    "distribution",
    "mean_flow_size",
    "host_rate_bps",
    "hosts_per_rack",
    "n",
    "k",
    "epoch",
    "central_delay",
    "local_delay",
    "central_window",
    "local_window",
    "alpha",
    "top_m",
    "max_reqs",
    "circuit_cap",
    "slot_len",
    "horizon_slots",
    "seed",
    "reconf_penalty",
    "slots",
    "total_bytes",
    "optical_bytes",
    "electrical_bytes",
    "optical_bytes_centralized",
    "optical_bytes_distributed",
    "optical_throughput_ratio",
    "reconfig_count",
    "reconfig_ratio_per_slot",
    "reconfig_ratio_half_n",
];

fn f(x: f64) -> String {
    format!("{x}")
}

fn r(x: f64) -> String {
    format!("{x:.6}")
}

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

pub fn run_summary_record(run: &ResolvedRun, reconf_penalty: bool, report: &MetricsReport) -> Vec<String> {
    let p = &run.policy.params;
    let w = &run.workload;
    vec![
        run.policy.kind.label().to_string(),
        run.distribution_name.clone(),
        f(w.mean_flow_size),
        f(w.host_rate_bps),
        w.hosts_per_rack.to_string(),
        p.n.to_string(),
        p.k.to_string(),
        p.epoch.to_string(),
        p.central_delay.to_string(),
        p.local_delay.to_string(),
        p.central_window.to_string(),
        p.local_window.to_string(),
        f(p.alpha),
        p.top_m.to_string(),
        p.max_reqs.to_string(),
        p.circuit_cap.to_string(),
        f(p.slot_len),
        run.horizon_slots.to_string(),
        run.seed.to_string(),
        reconf_penalty.to_string(),
        report.slots.to_string(),
        report.total_bytes.to_string(),
        report.optical_bytes.to_string(),
        report.electrical_bytes.to_string(),
        report.optical_bytes_centralized.to_string(),
        report.optical_bytes_distributed.to_string(),
        r(report.optical_throughput_ratio),
        report.reconfig_count.to_string(),
        r(report.reconfig_ratio_per_slot),
        r(report.reconfig_ratio_half_n),
    ]
}

pub fn write_run_summary(
    path: &Path,
    run: &ResolvedRun,
    reconf_penalty: bool,
    report: &MetricsReport,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(RUN_SUMMARY_HEADER)?;
    w.write_record(run_summary_record(run, reconf_penalty, report))?;
    w.flush()?;
    Ok(())
}

pub const SERIES_HEADER: [&str; 4] = ["slot", "optical_bytes", "total_bytes", "reconfigs"];

pub fn write_series(path: &Path, series: &SlotSeries) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(SERIES_HEADER)?;
    for slot in 0..series.optical_bytes.len() {
        w.write_record([
            slot.to_string(),
            series.optical_bytes[slot].to_string(),
            series.total_bytes[slot].to_string(),
            series.reconfigs[slot].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One sweep cell: the ratio of two policies' mean optical throughput on
/// shared traces.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub distribution: String,
    pub mean_flow_size: f64,
    pub host_rate_bps: f64,
    pub degree: usize,
    pub numerator_policy: PolicyKind,
    pub denominator_policy: PolicyKind,
    pub numerator_mean_ratio: Option<f64>,
    pub denominator_mean_ratio: Option<f64>,
    pub ratio: Option<f64>,
    pub repeats: usize,
    pub error: Option<String>,
}

pub const SWEEP_HEADER: [&str; 11] = [
    "distribution",
    "mean_flow_size",
    "host_rate_bps",
    "degree",
    "numerator_policy",
    "denominator_policy",
    "numerator_mean_ratio",
    "denominator_mean_ratio",
    "ratio",
    "repeats",
    "error",
];

fn sort_sweep(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| {
        (a.distribution.as_str(), a.degree)
            .cmp(&(b.distribution.as_str(), b.degree))
            .then(a.mean_flow_size.total_cmp(&b.mean_flow_size))
            .then(a.host_rate_bps.total_cmp(&b.host_rate_bps))
    });
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> anyhow::Result<()> {
    let mut rows = rows.to_vec();
    sort_sweep(&mut rows);
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(SWEEP_HEADER)?;
    for row in &rows {
        w.write_record([
            row.distribution.clone(),
            f(row.mean_flow_size),
            f(row.host_rate_bps),
            row.degree.to_string(),
            row.numerator_policy.label().to_string(),
            row.denominator_policy.label().to_string(),
            opt(&row.numerator_mean_ratio.map(|x| r(x))),
            opt(&row.denominator_mean_ratio.map(|x| r(x))),
            opt(&row.ratio.map(|x| r(x))),
            row.repeats.to_string(),
            opt(&row.error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One matrix file per (distribution, degree): rows are mean flow sizes,
/// columns host rates, cells the policy ratio (empty where a cell
/// failed).
pub fn write_sweep_matrices(dir: &Path, rows: &[SweepRow]) -> anyhow::Result<Vec<PathBuf>> {
    let mut rows = rows.to_vec();
    sort_sweep(&mut rows);
    let mut groups: Vec<(String, usize)> = rows
        .iter()
        .map(|row| (row.distribution.clone(), row.degree))
        .collect();
    groups.dedup();

    let mut written = Vec::new();
    for (dist, degree) in groups {
        let cells: Vec<&SweepRow> = rows
            .iter()
            .filter(|row| row.distribution == dist && row.degree == degree)
            .collect();
        let mut rates: Vec<f64> = cells.iter().map(|c| c.host_rate_bps).collect();
        rates.sort_by(f64::total_cmp);
        rates.dedup();
        let mut means: Vec<f64> = cells.iter().map(|c| c.mean_flow_size).collect();
        means.sort_by(f64::total_cmp);
        means.dedup();

        let path = dir.join(format!("sweep_matrix_{dist}_k{degree}.csv"));
        let mut w =
            csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        let mut header = vec!["mean_flow_size".to_string()];
        header.extend(rates.iter().map(|&x| f(x)));
        w.write_record(&header)?;
        for &mean in &means {
            let mut record = vec![f(mean)];
            for &rate in &rates {
                let cell = cells
                    .iter()
                    .find(|c| c.mean_flow_size == mean && c.host_rate_bps == rate)
                    .and_then(|c| c.ratio);
                record.push(cell.map(r).unwrap_or_default());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// One compare row: a policy's metrics on one grid cell, averaged over
/// the repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub distribution: String,
    pub mean_flow_size: f64,
    pub host_rate_bps: f64,
    pub degree: usize,
    pub policy: PolicyKind,
    pub alpha: Option<f64>,
    pub repeats: usize,
    pub mean_optical_ratio: Option<f64>,
    pub std_optical_ratio: Option<f64>,
    pub mean_reconfig_ratio: Option<f64>,
    pub std_reconfig_ratio: Option<f64>,
    pub mean_optical_bytes: Option<f64>,
    pub mean_total_bytes: Option<f64>,
    pub error: Option<String>,
}

pub const COMPARE_HEADER: [&str; 14] = [
    "distribution",
    "mean_flow_size",
    "host_rate_bps",
    "degree",
    "policy",
    "alpha",
    "repeats",
    "mean_optical_ratio",
    "std_optical_ratio",
    "mean_reconfig_ratio",
    "std_reconfig_ratio",
    "mean_optical_bytes",
    "mean_total_bytes",
    "error",
];

pub fn write_compare(path: &Path, rows: &[CompareRow]) -> anyhow::Result<()> {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| {
        (a.distribution.as_str(), a.degree)
            .cmp(&(b.distribution.as_str(), b.degree))
            .then(a.mean_flow_size.total_cmp(&b.mean_flow_size))
            .then(a.host_rate_bps.total_cmp(&b.host_rate_bps))
            .then(a.policy.label().cmp(b.policy.label()))
    });
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(COMPARE_HEADER)?;
    for row in &rows {
        w.write_record([
            row.distribution.clone(),
            f(row.mean_flow_size),
            f(row.host_rate_bps),
            row.degree.to_string(),
            row.policy.label().to_string(),
            opt(&row.alpha.map(f)),
            row.repeats.to_string(),
            opt(&row.mean_optical_ratio.map(r)),
            opt(&row.std_optical_ratio.map(r)),
            opt(&row.mean_reconfig_ratio.map(r)),
            opt(&row.std_reconfig_ratio.map(r)),
            opt(&row.mean_optical_bytes.map(|x| format!("{x:.1}"))),
            opt(&row.mean_total_bytes.map(|x| format!("{x:.1}"))),
            opt(&row.error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean and sample standard deviation; std is 0 for fewer than two
/// observations.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_basics() {
        assert_eq!(mean_std(&[]), (0.0, 0.0));
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-12);
    }

    fn sample_sweep_rows() -> Vec<SweepRow> {
        let mk = |mean: f64, rate: f64, ratio: Option<f64>, error: Option<&str>| SweepRow {
            distribution: "pfabric".into(),
            mean_flow_size: mean,
            host_rate_bps: rate,
            degree: 4,
            numerator_policy: PolicyKind::DistributedOnly,
            denominator_policy: PolicyKind::CentralizedOnly,
            numerator_mean_ratio: ratio.map(|x| x / 2.0),
            denominator_mean_ratio: ratio.map(|_| 0.5),
            ratio,
            repeats: 2,
            error: error.map(String::from),
        };
        vec![
            mk(2e6, 2e8, Some(0.9), None),
            mk(1e6, 1e8, Some(1.2), None),
            mk(1e6, 2e8, None, Some("boom")),
            mk(2e6, 1e8, Some(1.1), None),
        ]
    }

    #[test]
    fn sweep_files_are_sorted_and_stable() {
        let dir = tempfile::tempdir().unwrap();
        let long = dir.path().join("sweep.csv");
        write_sweep(&long, &sample_sweep_rows()).unwrap();
        let text = std::fs::read_to_string(&long).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER.join(","));
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("pfabric,1000000,100000000,4,distributed,centralized,"));
        assert!(lines[2].contains("boom"));
        assert!(lines[2].contains(",,,2,boom"), "failed cell has empty ratios: {}", lines[2]);

        let matrices = write_sweep_matrices(dir.path(), &sample_sweep_rows()).unwrap();
        assert_eq!(matrices.len(), 1);
        let text = std::fs::read_to_string(&matrices[0]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "mean_flow_size,100000000,200000000");
        assert_eq!(lines[1], "1000000,1.200000,");
        assert_eq!(lines[2], "2000000,1.100000,0.900000");
    }

    #[test]
    fn compare_rows_sort_by_cell_then_policy() {
        let mk = |policy: PolicyKind, degree: usize| CompareRow {
            distribution: "hull".into(),
            mean_flow_size: 1e5,
            host_rate_bps: 2e8,
            degree,
            policy,
            alpha: (policy == PolicyKind::Hybrid).then_some(0.4),
            repeats: 3,
            mean_optical_ratio: Some(0.5),
            std_optical_ratio: Some(0.01),
            mean_reconfig_ratio: Some(0.2),
            std_reconfig_ratio: Some(0.0),
            mean_optical_bytes: Some(1e9),
            mean_total_bytes: Some(2e9),
            error: None,
        };
        let rows = vec![
            mk(PolicyKind::Hybrid, 2),
            mk(PolicyKind::CentralizedOnly, 2),
            mk(PolicyKind::DistributedOnly, 1),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("compare.csv");
        write_compare(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], COMPARE_HEADER.join(","));
        assert!(lines[1].contains(",1,distributed,"));
        assert!(lines[2].contains(",2,centralized,"));
        assert!(lines[3].contains(",2,hybrid,0.4,"));
    }
}

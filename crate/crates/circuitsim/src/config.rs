//! Configuration for the command line: TOML files with full defaults,
//! `CIRCUITSIM_*` environment overrides, and the seed chain that makes
//! grid cells reproducible and independent.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Policy, PolicyKind};
use crate::params::{ParamsError, SchedulerParams};
use crate::traffic::{make_distribution, DispersionConfig, FlowSizeDistribution, TrafficError, WorkloadConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("missing field {0}")]
    MissingField(String),
    #[error("field {field}: {reason}")]
    BadField { field: String, reason: String },
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
}

fn bad(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadField { field: field.to_string(), reason: reason.into() }
}

/// Scheduler parameters as written in config: identical to
/// `SchedulerParams` except alpha is optional, because only the hybrid
/// policy needs one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulerSection {
    pub n: usize,
    pub k: usize,
    pub epoch: u64,
    pub central_delay: u64,
    pub local_delay: u64,
    pub central_window: u64,
    pub local_window: u64,
    pub alpha: Option<f64>,
    pub top_m: usize,
    pub max_reqs: usize,
    pub slot_len: f64,
    pub circuit_cap: u64,
}

impl Default for SchedulerSection {
    fn default() -> Self {
        let p = SchedulerParams::defaults();
        SchedulerSection {
            n: p.n,
            k: p.k,
            epoch: p.epoch,
            central_delay: p.central_delay,
            local_delay: p.local_delay,
            central_window: p.central_window,
            local_window: p.local_window,
            alpha: None,
            top_m: p.top_m,
            max_reqs: p.max_reqs,
            slot_len: p.slot_len,
            circuit_cap: p.circuit_cap,
        }
    }
}

impl SchedulerSection {
    /// Materialize parameters for one policy; hybrid insists on alpha.
    pub fn resolve(&self, policy: PolicyKind) -> Result<SchedulerParams, ConfigError> {
        let alpha = match (policy, self.alpha) {
            (PolicyKind::Hybrid, None) => {
                return Err(ConfigError::MissingField(
                    "scheduler.alpha (required for the hybrid policy)".to_string(),
                ))
            }
            (_, a) => a.unwrap_or(0.0),
        };
        let params = SchedulerParams {
            n: self.n,
            k: self.k,
            epoch: self.epoch,
            central_delay: self.central_delay,
            local_delay: self.local_delay,
            central_window: self.central_window,
            local_window: self.local_window,
            alpha,
            top_m: self.top_m,
            max_reqs: self.max_reqs,
            slot_len: self.slot_len,
            circuit_cap: self.circuit_cap,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadSection {
    pub hosts_per_rack: usize,
    pub host_rate_bps: f64,
    pub host_link_bps: f64,
    pub hot_fraction: f64,
    pub hot_weight: f64,
}

impl Default for WorkloadSection {
    fn default() -> Self {
        let w = WorkloadConfig::defaults(2);
        WorkloadSection {
            hosts_per_rack: w.hosts_per_rack,
            host_rate_bps: w.host_rate_bps,
            host_link_bps: w.host_link_bps,
            hot_fraction: w.dispersion.hot_fraction,
            hot_weight: w.dispersion.hot_weight,
        }
    }
}

impl WorkloadSection {
    pub fn resolve(&self, racks: usize, slot_len: f64, seed: u64, host_rate_bps: f64) -> WorkloadConfig {
        WorkloadConfig {
            racks,
            hosts_per_rack: self.hosts_per_rack,
            host_rate_bps,
            host_link_bps: self.host_link_bps,
            mean_flow_size: 0.0, // set per run alongside the distribution
            dispersion: DispersionConfig {
                hot_fraction: self.hot_fraction,
                hot_weight: self.hot_weight,
            },
            slot_len,
            seed,
        }
    }
}

/// One simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub policy: PolicyKind,
    pub distribution: String,
    pub mean_flow_size: f64,
    /// Piecewise-linear CDF file for `distribution = "empirical"`.
    pub cdf_file: Option<String>,
    pub horizon_slots: i64,
    pub seed: u64,
    pub scheduler: SchedulerSection,
    pub workload: WorkloadSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            policy: PolicyKind::CentralizedOnly,
            distribution: "pfabric".to_string(),
            mean_flow_size: 1_700_000.0,
            cdf_file: None,
            horizon_slots: 10_000,
            seed: 1,
            scheduler: SchedulerSection::default(),
            workload: WorkloadSection::default(),
        }
    }
}

/// Everything a single engine run needs, fully materialized.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub policy: Policy,
    pub workload: WorkloadConfig,
    pub distribution: FlowSizeDistribution,
    pub distribution_name: String,
    pub horizon_slots: i64,
    pub seed: u64,
}

pub fn resolve_distribution(
    name: &str,
    mean: f64,
    cdf_file: Option<&str>,
) -> Result<FlowSizeDistribution, ConfigError> {
    if name.eq_ignore_ascii_case("empirical") {
        let path = cdf_file.ok_or_else(|| {
            ConfigError::MissingField("cdf_file (required for the empirical distribution)".into())
        })?;
        Ok(FlowSizeDistribution::from_cdf_file(Path::new(path))?)
    } else {
        Ok(make_distribution(name, mean)?)
    }
}

impl RunConfig {
    pub fn resolve(&self) -> Result<ResolvedRun, ConfigError> {
        if self.horizon_slots < 1 {
            return Err(bad("horizon_slots", "must be at least 1"));
        }
        let params = self.scheduler.resolve(self.policy)?;
        let policy = Policy::new(self.policy, params.clone())?;
        let dist = resolve_distribution(&self.distribution, self.mean_flow_size, self.cdf_file.as_deref())?;
        let mut workload =
            self.workload
                .resolve(params.n, params.slot_len, self.seed, self.workload.host_rate_bps);
        workload.mean_flow_size = dist.analytic_mean();
        workload.validate()?;
        Ok(ResolvedRun {
            policy,
            workload,
            distribution: dist,
            distribution_name: self.distribution.to_ascii_lowercase(),
            horizon_slots: self.horizon_slots,
            seed: self.seed,
        })
    }
}

/// Experiment grid driving sweep and compare: the cross product of
/// distributions, flow-size means, host rates and optical degrees, each
/// cell repeated over chained seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub distributions: Vec<String>,
    pub mean_flow_sizes: Vec<f64>,
    pub host_rates: Vec<f64>,
    pub alphas: Vec<f64>,
    pub degrees: Vec<usize>,
    pub repeats: usize,
    pub base_seed: u64,
    pub horizon_slots: i64,
    pub policies: Vec<PolicyKind>,
    pub scheduler: SchedulerSection,
    pub workload: WorkloadSection,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            distributions: vec!["pfabric".to_string()],
            mean_flow_sizes: vec![1_700_000.0],
            host_rates: vec![100e6, 200e6, 300e6, 400e6, 500e6, 600e6],
            alphas: vec![0.7],
            degrees: vec![1, 2, 4],
            repeats: 3,
            base_seed: 1,
            horizon_slots: 10_000,
            policies: vec![PolicyKind::DistributedOnly, PolicyKind::CentralizedOnly],
            scheduler: SchedulerSection::default(),
            workload: WorkloadSection::default(),
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, empty) in [
            ("distributions", self.distributions.is_empty()),
            ("mean_flow_sizes", self.mean_flow_sizes.is_empty()),
            ("host_rates", self.host_rates.is_empty()),
            ("alphas", self.alphas.is_empty()),
            ("degrees", self.degrees.is_empty()),
            ("policies", self.policies.is_empty()),
        ] {
            if empty {
                return Err(bad(name, "must not be empty"));
            }
        }
        if self.repeats < 1 {
            return Err(bad("repeats", "must be at least 1"));
        }
        if self.horizon_slots < 1 {
            return Err(bad("horizon_slots", "must be at least 1"));
        }
        Ok(())
    }

    /// Per-distribution lookup into a list that is either shared (one
    /// entry) or aligned with `distributions`.
    pub fn aligned<'v, T>(&self, field: &str, values: &'v [T], dist_idx: usize) -> Result<&'v T, ConfigError> {
        if values.len() == 1 {
            Ok(&values[0])
        } else if values.len() == self.distributions.len() {
            Ok(&values[dist_idx])
        } else {
            Err(bad(
                field,
                format!(
                    "needs 1 entry or one per distribution ({}), got {}",
                    self.distributions.len(),
                    values.len()
                ),
            ))
        }
    }

    /// Scheduler parameters for one cell: the base section with the
    /// cell's degree, with alpha aligned per distribution for hybrid.
    pub fn cell_policy(&self, kind: PolicyKind, dist_idx: usize, k: usize) -> Result<Policy, ConfigError> {
        let mut section = self.scheduler.clone();
        section.k = k;
        if kind == PolicyKind::Hybrid {
            section.alpha = Some(*self.aligned("alphas", &self.alphas, dist_idx)?);
        }
        Ok(Policy::new(kind, section.resolve(kind)?)?)
    }
}

/// One splitmix64 scramble step.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-cell seed from the base seed and cell coordinates.
pub fn chain_seed(base: u64, coords: &[u64]) -> u64 {
    let mut s = splitmix64(base ^ 0xA076_1D64_78BD_642F);
    for &c in coords {
        s = splitmix64(s ^ splitmix64(c.wrapping_add(0x2545_F491_4F6C_DD1D)));
    }
    s
}

const ENV_PREFIX: &str = "CIRCUITSIM_";

/// Overlay `CIRCUITSIM_*` variables onto a parsed config table.
/// `CIRCUITSIM_SCHEDULER_X` and `CIRCUITSIM_WORKLOAD_X` target those
/// sections; anything else sets a top-level key. Values parse as TOML
/// (numbers, bools, arrays) and fall back to strings. Returns the keys
/// applied, dotted.
pub fn apply_env_overrides(
    table: &mut toml::Table,
    vars: impl Iterator<Item = (String, String)>,
) -> Vec<String> {
    let mut applied = Vec::new();
    let mut sorted: BTreeMap<String, String> = BTreeMap::new();
    for (k, v) in vars {
        if let Some(rest) = k.strip_prefix(ENV_PREFIX) {
            if !rest.is_empty() {
                sorted.insert(rest.to_string(), v);
            }
        }
    }
    for (rest, raw) in sorted {
        let value = parse_env_value(&raw);
        let (section, field) = if let Some(f) = rest.strip_prefix("SCHEDULER_") {
            (Some("scheduler"), f.to_ascii_lowercase())
        } else if let Some(f) = rest.strip_prefix("WORKLOAD_") {
            (Some("workload"), f.to_ascii_lowercase())
        } else {
            (None, rest.to_ascii_lowercase())
        };
        match section {
            Some(name) => {
                let entry = table
                    .entry(name.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()));
                if let toml::Value::Table(t) = entry {
                    t.insert(field.clone(), value);
                    applied.push(format!("{name}.{field}"));
                }
            }
            None => {
                table.insert(field.clone(), value);
                applied.push(field);
            }
        }
    }
    applied
}

fn parse_env_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn load_table(path: Option<&Path>) -> Result<toml::Table, ConfigError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.display().to_string(),
                source,
            })?;
            text.parse::<toml::Table>()?
        }
        None => toml::Table::new(),
    };
    apply_env_overrides(&mut table, std::env::vars());
    Ok(table)
}

pub fn load_run_config(path: Option<&Path>) -> Result<RunConfig, ConfigError> {
    Ok(load_table(path)?.try_into()?)
}

pub fn load_grid_config(path: Option<&Path>) -> Result<GridConfig, ConfigError> {
    let cfg: GridConfig = load_table(path)?.try_into()?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_to_a_runnable_config() {
        let cfg = RunConfig::default();
        let run = cfg.resolve().unwrap();
        assert_eq!(run.policy.kind, PolicyKind::CentralizedOnly);
        assert_eq!(run.policy.params.n, 16);
        assert_eq!(run.workload.racks, 16);
        assert_eq!(run.workload.seed, 1);
        assert!((run.workload.mean_flow_size - 1.7e6).abs() < 1.0);
    }

    #[test]
    fn toml_round_trip_with_sections() {
        let text = r#"
            policy = "hybrid"
            distribution = "hull"
            mean_flow_size = 1e5
            seed = 42
            horizon_slots = 500

            [scheduler]
            n = 8
            k = 2
            alpha = 0.4
            max_reqs = 4

            [workload]
            host_rate_bps = 3e8
        "#;
        let cfg: RunConfig = text.parse::<toml::Table>().unwrap().try_into().unwrap();
        let run = cfg.resolve().unwrap();
        assert_eq!(run.policy.kind, PolicyKind::Hybrid);
        assert_eq!(run.policy.params.alpha, 0.4);
        assert_eq!(run.policy.params.k, 2);
        assert_eq!(run.workload.host_rate_bps, 3e8);
        assert_eq!(run.distribution_name, "hull");
    }

    #[test]
    fn hybrid_without_alpha_names_the_field() {
        let cfg = RunConfig { policy: PolicyKind::Hybrid, ..RunConfig::default() };
        let err = cfg.resolve().unwrap_err().to_string();
        assert!(err.contains("scheduler.alpha"), "unexpected message: {err}");
    }

    #[test]
    fn degree_at_least_n_is_rejected() {
        let mut cfg = RunConfig::default();
        cfg.scheduler.n = 4;
        cfg.scheduler.k = 4;
        cfg.scheduler.top_m = 3;
        let err = cfg.resolve().unwrap_err().to_string();
        assert!(err.contains("k"), "unexpected message: {err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = "policyy = \"hybrid\"";
        let res: Result<RunConfig, _> = text.parse::<toml::Table>().unwrap().try_into();
        let err = res.unwrap_err().to_string();
        assert!(err.contains("policyy"), "unexpected message: {err}");
    }

    #[test]
    fn env_overrides_sections_and_top_level() {
        let mut table = "policy = \"centralized\"\n[scheduler]\nk = 4".parse::<toml::Table>().unwrap();
        let vars = [
            ("CIRCUITSIM_SCHEDULER_K".to_string(), "2".to_string()),
            ("CIRCUITSIM_SCHEDULER_CENTRAL_DELAY".to_string(), "5".to_string()),
            ("CIRCUITSIM_DISTRIBUTION".to_string(), "vl2".to_string()),
            ("CIRCUITSIM_MEAN_FLOW_SIZE".to_string(), "2.5e6".to_string()),
            ("OTHER_VAR".to_string(), "ignored".to_string()),
        ];
        let applied = apply_env_overrides(&mut table, vars.into_iter());
        assert_eq!(
            applied,
            vec!["distribution", "mean_flow_size", "scheduler.central_delay", "scheduler.k"]
        );
        let cfg: RunConfig = table.try_into().unwrap();
        assert_eq!(cfg.scheduler.k, 2);
        assert_eq!(cfg.scheduler.central_delay, 5);
        assert_eq!(cfg.distribution, "vl2");
        assert_eq!(cfg.mean_flow_size, 2.5e6);
    }

    #[test]
    fn env_arrays_parse_as_toml() {
        let mut table = toml::Table::new();
        let vars = [("CIRCUITSIM_DEGREES".to_string(), "[1, 2, 4]".to_string())];
        apply_env_overrides(&mut table, vars.into_iter());
        let cfg: GridConfig = table.try_into().unwrap();
        assert_eq!(cfg.degrees, vec![1, 2, 4]);
    }

    #[test]
    fn grid_validation_names_empty_lists() {
        let cfg = GridConfig { degrees: vec![], ..GridConfig::default() };
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("degrees"), "unexpected message: {err}");
        let cfg = GridConfig { repeats: 0, ..GridConfig::default() };
        assert!(cfg.validate().unwrap_err().to_string().contains("repeats"));
    }

    #[test]
    fn aligned_lists_accept_one_or_matching_length() {
        let grid = GridConfig {
            distributions: vec!["hull".into(), "pfabric".into()],
            alphas: vec![0.4, 0.7],
            ..GridConfig::default()
        };
        assert_eq!(*grid.aligned("alphas", &grid.alphas, 1).unwrap(), 0.7);
        let single = GridConfig { alphas: vec![0.5], ..grid.clone() };
        assert_eq!(*single.aligned("alphas", &single.alphas, 1).unwrap(), 0.5);
        let bad_grid = GridConfig { alphas: vec![0.1, 0.2, 0.3], ..grid };
        let err = bad_grid.aligned("alphas", &bad_grid.alphas, 0).unwrap_err().to_string();
        assert!(err.contains("alphas"), "unexpected message: {err}");
    }

    #[test]
    fn cell_policy_sets_degree_and_alpha() {
        let grid = GridConfig {
            distributions: vec!["hull".into(), "pfabric".into()],
            alphas: vec![0.4, 0.7],
            ..GridConfig::default()
        };
        let p = grid.cell_policy(PolicyKind::Hybrid, 0, 2).unwrap();
        assert_eq!(p.params.k, 2);
        assert_eq!(p.params.alpha, 0.4);
        let c = grid.cell_policy(PolicyKind::CentralizedOnly, 1, 1).unwrap();
        assert_eq!(c.params.alpha, 0.0, "non-hybrid ignores the alpha axis");
    }

    #[test]
    fn seed_chain_is_deterministic_and_sensitive() {
        let a = chain_seed(7, &[0, 1, 2, 3]);
        assert_eq!(a, chain_seed(7, &[0, 1, 2, 3]));
        assert_ne!(a, chain_seed(7, &[0, 1, 2, 4]));
        assert_ne!(a, chain_seed(7, &[1, 0, 2, 3]));
        assert_ne!(a, chain_seed(8, &[0, 1, 2, 3]));

        // No collisions across a realistic grid.
        let mut seen = std::collections::BTreeSet::new();
        for d in 0..3u64 {
            for m in 0..5u64 {
                for r in 0..6u64 {
                    for k in 0..3u64 {
                        for rep in 0..10u64 {
                            assert!(seen.insert(chain_seed(1, &[d, m, r, k, rep])));
                        }
                    }
                }
            }
        }
    }
}

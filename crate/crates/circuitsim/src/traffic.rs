//! Workload synthesis: Poisson flow arrivals per host, heavy-tailed flow
//! sizes, rack-level dispersion, and the fluid transmission model that
//! turns a flow list into a per-slot demand trace.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use thiserror::Error;

use crate::circuits::NodeId;
use crate::params::SchedulerParams;
use crate::trace::{Slot, TrafficTrace};

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("unknown distribution name `{0}` (expected hull, pfabric or vl2)")]
    UnknownDistribution(String),
    #[error("mean flow size must be positive")]
    BadMean,
    #[error("invalid workload config: {0}")]
    BadConfig(String),
    #[error("invalid empirical cdf: {0}")]
    BadCdf(String),
}

/// Flow size distribution with its analytic mean attached.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowSizeDistribution {
    /// Pareto density truncated to [min, max]; heavy tail, finite range.
    BoundedPareto { shape: f64, min: f64, max: f64, mean: f64 },
    LogNormal { mu: f64, sigma: f64, mean: f64 },
    /// Piecewise-linear CDF through `points` (size, cumulative prob); the
    /// first point carries its probability as an atom at that size.
    EmpiricalCdf { points: Vec<(u64, f64)>, mean: f64 },
}

impl FlowSizeDistribution {
    pub fn analytic_mean(&self) -> f64 {
        match self {
            FlowSizeDistribution::BoundedPareto { mean, .. } => *mean,
            FlowSizeDistribution::LogNormal { mean, .. } => *mean,
            FlowSizeDistribution::EmpiricalCdf { mean, .. } => *mean,
        }
    }

    /// Draw one flow size in bytes (always ≥ 1).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let x = match self {
            FlowSizeDistribution::BoundedPareto { shape, min, max, .. } => {
                // Inverse CDF of the bounded Pareto.
                let u: f64 = rng.random();
                let ratio = 1.0 - u * (1.0 - (min / max).powf(*shape));
                (min / ratio.powf(1.0 / shape)).min(*max)
            }
            FlowSizeDistribution::LogNormal { mu, sigma, .. } => {
                LogNormal::new(*mu, *sigma).unwrap().sample(rng)
            }
            FlowSizeDistribution::EmpiricalCdf { points, .. } => {
                let u: f64 = rng.random();
                sample_empirical(points, u)
            }
        };
        (x.round() as u64).max(1)
    }

    /// Build an empirical distribution from (size, cumulative prob) points.
    pub fn from_cdf_points(points: Vec<(u64, f64)>) -> Result<Self, TrafficError> {
        if points.is_empty() {
            return Err(TrafficError::BadCdf("no points".into()));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
                return Err(TrafficError::BadCdf(
                    "points must be strictly increasing in size and probability".into(),
                ));
            }
        }
        let first = points[0];
        let last = points[points.len() - 1];
        if first.1 < 0.0 || (last.1 - 1.0).abs() > 1e-9 {
            return Err(TrafficError::BadCdf("last cumulative prob must be 1".into()));
        }
        // Atom at the first point, trapezoids between the rest.
        let mut mean = first.0 as f64 * first.1;
        for w in points.windows(2) {
            mean += (w[1].1 - w[0].1) * (w[0].0 as f64 + w[1].0 as f64) / 2.0;
        }
        Ok(FlowSizeDistribution::EmpiricalCdf { points, mean })
    }

    /// Load an empirical CDF from a two-column CSV (size_bytes, cum_prob).
    pub fn from_cdf_file(path: &std::path::Path) -> Result<Self, TrafficError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(false)
            .from_path(path)
            .map_err(|e| TrafficError::BadCdf(e.to_string()))?;
        let mut points = vec![];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| TrafficError::BadCdf(e.to_string()))?;
            if rec.len() != 2 {
                return Err(TrafficError::BadCdf("expected two columns".into()));
            }
            let size: u64 = rec[0]
                .trim()
                .parse()
                .map_err(|_| TrafficError::BadCdf(format!("bad size `{}`", &rec[0])))?;
            let p: f64 = rec[1]
                .trim()
                .parse()
                .map_err(|_| TrafficError::BadCdf(format!("bad prob `{}`", &rec[1])))?;
            points.push((size, p));
        }
        Self::from_cdf_points(points)
    }
}

fn sample_empirical(points: &[(u64, f64)], u: f64) -> f64 {
    let first = points[0];
    if u <= first.1 {
        return first.0 as f64;
    }
    for w in points.windows(2) {
        if u <= w[1].1 {
            let frac = (u - w[0].1) / (w[1].1 - w[0].1);
            return w[0].0 as f64 + frac * (w[1].0 as f64 - w[0].0 as f64);
        }
    }
    points[points.len() - 1].0 as f64
}

/// Mean of a Pareto density with the given shape truncated to [lo, hi].
fn bounded_pareto_mean(shape: f64, lo: f64, hi: f64) -> f64 {
    let a = shape;
    (a / (a - 1.0)) * (lo - lo.powf(a) * hi.powf(1.0 - a)) / (1.0 - (lo / hi).powf(a))
}

/// Construct one of the three named flow size regimes, rescaled so the
/// analytic mean equals `mean_flow_size`.
///
/// hull: bounded Pareto, shape 1.05, upper cutoff 10^4 x mean (the raw
/// distribution has unbounded variance; the cutoff keeps sample means
/// stable). pfabric / vl2: log-normal with the standard deviation scaled
/// proportionally from the (1.7 MB, 3.9 MB) and (12 MB, 85 MB) anchors.
pub fn make_distribution(
    name: &str,
    mean_flow_size: f64,
) -> Result<FlowSizeDistribution, TrafficError> {
    if !(mean_flow_size > 0.0) {
        return Err(TrafficError::BadMean);
    }
    match name.to_ascii_lowercase().as_str() {
        "hull" => {
            let shape = 1.05;
            let max = 1e4 * mean_flow_size;
            // The truncated mean grows monotonically with the lower cutoff;
            // bisect for the cutoff that hits the requested mean.
            let (mut lo, mut hi) = (1e-9 * mean_flow_size, mean_flow_size);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if bounded_pareto_mean(shape, mid, max) < mean_flow_size {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let min = 0.5 * (lo + hi);
            Ok(FlowSizeDistribution::BoundedPareto {
                shape,
                min,
                max,
                mean: bounded_pareto_mean(shape, min, max),
            })
        }
        "pfabric" => Ok(lognormal_from_moments(mean_flow_size, mean_flow_size * 3.9 / 1.7)),
        "vl2" => Ok(lognormal_from_moments(mean_flow_size, mean_flow_size * 85.0 / 12.0)),
        other => Err(TrafficError::UnknownDistribution(other.to_string())),
    }
}

fn lognormal_from_moments(mean: f64, std: f64) -> FlowSizeDistribution {
    let sigma2 = (1.0 + (std / mean).powi(2)).ln();
    let mu = mean.ln() - sigma2 / 2.0;
    FlowSizeDistribution::LogNormal { mu, sigma: sigma2.sqrt(), mean }
}

/// One fluid flow between two racks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    pub id: u64,
    pub src: NodeId,
    pub dst: NodeId,
    /// Host within the source rack; flows sharing a host share its link.
    pub src_host: usize,
    pub size: u64,
    pub arrival: Slot,
    pub remaining: u64,
    /// Per-slot byte cap from the host's access link.
    pub rate_cap: u64,
}

/// Rack-level dispersion: each source rack sends `hot_weight` of its flows
/// to a fixed hot set covering `hot_fraction` of the other racks.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DispersionConfig {
    pub hot_fraction: f64,
    pub hot_weight: f64,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig { hot_fraction: 0.1, hot_weight: 0.7 }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WorkloadConfig {
    pub racks: usize,
    pub hosts_per_rack: usize,
    /// Mean offered load per host in bits per second.
    pub host_rate_bps: f64,
    /// Host access link speed in bits per second (caps transmission).
    pub host_link_bps: f64,
    pub mean_flow_size: f64,
    pub dispersion: DispersionConfig,
    pub slot_len: f64,
    pub seed: u64,
}

impl WorkloadConfig {
    pub fn defaults(racks: usize) -> Self {
        WorkloadConfig {
            racks,
            hosts_per_rack: 10,
            host_rate_bps: 200e6,
            host_link_bps: 1e9,
            mean_flow_size: 1.7e6,
            dispersion: DispersionConfig::default(),
            slot_len: 1e-3,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        let bad = |m: &str| Err(TrafficError::BadConfig(m.into()));
        if self.racks < 2 {
            return bad("racks must be >= 2");
        }
        if self.hosts_per_rack == 0 {
            return bad("hosts_per_rack must be >= 1");
        }
        if !(self.host_rate_bps >= 0.0) {
            return bad("host_rate_bps must be >= 0");
        }
        if !(self.host_link_bps > 0.0) {
            return bad("host_link_bps must be > 0");
        }
        if !(self.mean_flow_size >= 1.0) {
            return bad("mean_flow_size must be >= 1 byte");
        }
        if !(self.dispersion.hot_fraction > 0.0 && self.dispersion.hot_fraction <= 1.0) {
            return bad("hot_fraction must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.dispersion.hot_weight) {
            return bad("hot_weight must be in [0, 1]");
        }
        if !(self.slot_len > 0.0) {
            return bad("slot_len must be > 0");
        }
        Ok(())
    }

    /// Host access link in bytes per slot.
    pub fn link_bytes_per_slot(&self) -> u64 {
        (self.host_link_bps * self.slot_len / 8.0).floor() as u64
    }
}

/// Sample Poisson flow arrivals over `horizon` slots.
///
/// Arrival rate per rack is hosts_per_rack x host_rate / mean_flow_size
/// flows per second. Destinations follow the dispersion model: a per-rack
/// hot set (drawn once) receives `hot_weight` of the flows, the remaining
/// racks split the rest uniformly. Deterministic for a fixed seed: the
/// generator runs one independent substream per purpose (hot sets, arrival
/// counts, sizes, placement) so draws cannot bleed across concerns.
pub fn generate_flows(
    cfg: &WorkloadConfig,
    dist: &FlowSizeDistribution,
    horizon: Slot,
) -> Vec<Flow> {
    assert!(horizon >= 1, "horizon must be >= 1 slot");
    cfg.validate().expect("invalid workload config");

    let mut hot_rng = substream(cfg.seed, 0);
    let mut arrival_rng = substream(cfg.seed, 1);
    let mut size_rng = substream(cfg.seed, 2);
    let mut place_rng = substream(cfg.seed, 3);

    let n = cfg.racks;
    // Hot set size: hot_fraction of the other racks, at least one.
    let hot_size = ((cfg.dispersion.hot_fraction * (n - 1) as f64).round() as usize)
        .clamp(1, n - 1);
    let mut hot_sets: Vec<Vec<NodeId>> = Vec::with_capacity(n);
    let mut cold_sets: Vec<Vec<NodeId>> = Vec::with_capacity(n);
    for i in 0..n {
        let others: Vec<NodeId> = (0..n).filter(|&j| j != i).collect();
        let idx = rand::seq::index::sample(&mut hot_rng, others.len(), hot_size);
        let mut hot: Vec<NodeId> = idx.iter().map(|x| others[x]).collect();
        hot.sort_unstable();
        let cold: Vec<NodeId> = others.into_iter().filter(|j| !hot.contains(j)).collect();
        hot_sets.push(hot);
        cold_sets.push(cold);
    }

    let flows_per_sec = cfg.hosts_per_rack as f64 * (cfg.host_rate_bps / 8.0) / cfg.mean_flow_size;
    let lambda_slot = flows_per_sec * cfg.slot_len;
    let rate_cap = cfg.link_bytes_per_slot();

    let mut flows = vec![];
    if lambda_slot <= 0.0 {
        return flows;
    }
    let poisson = Poisson::new(lambda_slot).expect("positive arrival rate");
    let mut id = 0u64;
    for t in 0..horizon {
        for rack in 0..n {
            let count = poisson.sample(&mut arrival_rng) as u64;
            for _ in 0..count {
                let src_host = place_rng.random_range(0..cfg.hosts_per_rack);
                let hot = &hot_sets[rack];
                let cold = &cold_sets[rack];
                let pick_hot =
                    cold.is_empty() || place_rng.random_bool(cfg.dispersion.hot_weight);
                let dst = if pick_hot {
                    hot[place_rng.random_range(0..hot.len())]
                } else {
                    cold[place_rng.random_range(0..cold.len())]
                };
                let size = dist.sample(&mut size_rng);
                flows.push(Flow {
                    id,
                    src: rack,
                    dst,
                    src_host,
                    size,
                    arrival: t,
                    remaining: size,
                    rate_cap,
                });
                id += 1;
            }
        }
    }
    flows
}

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Run the fluid transmission model and materialize the demand trace.
///
/// Each slot, every active flow sends min(remaining, rate_cap, link/m)
/// bytes, where m is the number of active flows sharing its source host
/// (equal split, no redistribution of unused share). A flow's final slot
/// carries whatever remainder is left, so the trace total equals the flow
/// size total exactly. The trace keeps draining past `horizon` until every
/// flow finishes.
pub fn build_trace(flows: &[Flow], params: &SchedulerParams, horizon: Slot) -> TrafficTrace {
    assert!(horizon >= 1);
    let mut trace = TrafficTrace::new(params.n);
    let mut order: Vec<usize> = (0..flows.len()).collect();
    order.sort_by_key(|&f| (flows[f].arrival, flows[f].id));

    let mut remaining: Vec<u64> = flows.iter().map(|f| f.remaining).collect();
    let mut active: Vec<usize> = vec![];
    let mut next = 0usize;
    let mut t: Slot = 0;
    while next < order.len() || !active.is_empty() || t < horizon {
        while next < order.len() && flows[order[next]].arrival <= t {
            assert!(flows[order[next]].arrival == t, "flow arrives in the past");
            active.push(order[next]);
            next += 1;
        }
        // Group the active flows by source host to split its link.
        let mut groups: std::collections::BTreeMap<(NodeId, usize), Vec<usize>> =
            std::collections::BTreeMap::new();
        for &f in &active {
            groups.entry((flows[f].src, flows[f].src_host)).or_default().push(f);
        }
        for ((_, _), members) in groups {
            let link = members.iter().map(|&f| flows[f].rate_cap).max().unwrap();
            let share = link / members.len() as u64;
            for f in members {
                let send = remaining[f].min(flows[f].rate_cap).min(share);
                if send > 0 {
                    trace
                        .record(t, flows[f].src, flows[f].dst, send)
                        .expect("flow writes must stay in order");
                    remaining[f] -= send;
                }
            }
        }
        active.retain(|&f| remaining[f] > 0);
        t += 1;
    }
    // Slots with zero traffic at the tail still count toward the horizon.
    if trace.horizon() < horizon - 1 {
        trace.extend_to(horizon - 1);
    }
    trace
}

//! Slotted simulation loop. Each slot the engine applies whatever
//! scheduling the policy calls for, serves every live circuit up to its
//! capacity from that slot's traffic (the rest falls through to the
//! electrical network, modeled as an infinite sink), and tallies bytes
//! and circuit reconfigurations.

use std::collections::BTreeSet;

use crate::central::{central_compute, CentralAllocation, EpochBaseline};
use crate::circuits::{CircuitOrigin, CircuitState, Pair};
use crate::matching::{iterated_b_matching, BMatching, DemandGraph};
use crate::params::{ParamsError, SchedulerParams};
use crate::protocol::{apply_central_allocation, new_states, run_distributed_slot, NodeState};
use crate::trace::{Slot, TrafficTrace};
use crate::traffic::{build_trace, generate_flows, FlowSizeDistribution, WorkloadConfig};

/// Capacity lost to switching on a circuit's first slot, as a fraction of
/// the slot: an 11 us reconfiguration inside a 1 ms slot.
const RECONF_LOSS_NUM: u64 = 11;
const RECONF_LOSS_DEN: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PolicyKind {
    /// Epoch-based delayed b-matching only.
    #[serde(rename = "centralized")]
    CentralizedOnly,
    /// Per-slot request/grant protocol only.
    #[serde(rename = "distributed")]
    DistributedOnly,
    /// Centralized allocations thresholded and topped up by the
    /// distributed protocol.
    #[serde(rename = "hybrid")]
    Hybrid,
    /// Centralized scheduling with zero delay and a one-slot window,
    /// recomputed every slot: the best any scheduler can do without
    /// seeing traffic before it happens.
    #[serde(rename = "online-optimal")]
    OnlineOptimal,
    /// Per-slot b-matching on the current slot's true traffic. The only
    /// policy allowed to read the slot it is scheduling.
    #[serde(rename = "optimal-future")]
    OptimalFuture,
}

impl PolicyKind {
    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::CentralizedOnly => "centralized",
            PolicyKind::DistributedOnly => "distributed",
            PolicyKind::Hybrid => "hybrid",
            PolicyKind::OnlineOptimal => "online-optimal",
            PolicyKind::OptimalFuture => "optimal-future",
        }
    }

    fn uses_central(&self) -> bool {
        !matches!(self, PolicyKind::DistributedOnly)
    }

    fn uses_distributed(&self) -> bool {
        matches!(self, PolicyKind::DistributedOnly | PolicyKind::Hybrid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub kind: PolicyKind,
    pub params: SchedulerParams,
}

impl Policy {
    /// Bind a kind to parameters, normalizing the idealized policies
    /// (every slot an epoch, no delay, untruncated reports) and
    /// validating the result.
    pub fn new(kind: PolicyKind, params: SchedulerParams) -> Result<Policy, ParamsError> {
        let mut params = params;
        if matches!(kind, PolicyKind::OnlineOptimal | PolicyKind::OptimalFuture) {
            params.epoch = 1;
            params.central_delay = 0;
            params.local_delay = 0;
            params.central_window = 1;
            params.top_m = params.n - 1;
        }
        params.validate()?;
        Ok(Policy { kind, params })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineOptions {
    /// Haircut a newly connected circuit's first-slot capacity by the
    /// switching time.
    pub reconf_penalty: bool,
    /// Keep per-slot byte and reconfiguration series in the report.
    pub record_series: bool,
    /// Check circuit-state consistency after every slot.
    pub validate_each_slot: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { reconf_penalty: true, record_series: false, validate_each_slot: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlotSeries {
    pub optical_bytes: Vec<u64>,
    pub total_bytes: Vec<u64>,
    pub reconfigs: Vec<u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub slots: u64,
    pub optical_bytes: u64,
    pub electrical_bytes: u64,
    pub total_bytes: u64,
    pub optical_bytes_centralized: u64,
    pub optical_bytes_distributed: u64,
    pub reconfig_count: u64,
    /// optical_bytes / total_bytes.
    pub optical_throughput_ratio: f64,
    /// Mean per-slot reconfigured pairs over n*k/2 concurrent circuits.
    pub reconfig_ratio_per_slot: f64,
    /// Same count over the degree-independent n/2 denominator.
    pub reconfig_ratio_half_n: f64,
    pub series: Option<SlotSeries>,
}

/// What one slot produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotOutcome {
    pub optical_bytes: u64,
    pub optical_bytes_centralized: u64,
    pub optical_bytes_distributed: u64,
    pub total_bytes: u64,
    pub reconfigs: u64,
}

/// Mutable simulation state for one run over a fixed trace.
pub struct World<'a> {
    pub trace: &'a TrafficTrace,
    pub circuits: CircuitState,
    states: Vec<NodeState>,
    baselines: EpochBaseline,
    prev_pairs: BTreeSet<Pair>,
}

impl<'a> World<'a> {
    pub fn new(trace: &'a TrafficTrace, params: &SchedulerParams) -> World<'a> {
        assert_eq!(trace.num_racks(), params.n, "trace and params disagree on rack count");
        World {
            trace,
            circuits: CircuitState::new(params.n, params.k),
            states: new_states(params.n),
            baselines: EpochBaseline::default(),
            prev_pairs: BTreeSet::new(),
        }
    }
}

/// The clairvoyant per-slot allocation: a b-matching over the current
/// slot's demands, clamped at circuit capacity so weight equals servable
/// bytes.
fn optimal_future_allocation(trace: &TrafficTrace, params: &SchedulerParams, now: Slot) -> CentralAllocation {
    let mut g = DemandGraph::new(params.n);
    for i in 0..params.n {
        for j in (i + 1)..params.n {
            g.add_weight(i, j, trace.pair_demand(now, i, j).min(params.circuit_cap));
        }
    }
    let pairs: BMatching = iterated_b_matching(&g, params.k);
    let rates = pairs
        .pairs
        .iter()
        .map(|&p| (p, g.weight(p.lo(), p.hi()) as f64))
        .collect();
    CentralAllocation {
        pairs,
        baselines: EpochBaseline { rates, epoch_start: now },
        decided_at: now,
        effective_at: now,
    }
}

/// Advance one slot: schedule, serve, count reconfigurations.
pub fn step(world: &mut World, policy: &Policy, opts: &EngineOptions, now: Slot) -> SlotOutcome {
    let params = &policy.params;

    if policy.kind.uses_central() && now % params.epoch as Slot == 0 {
        let alloc = if policy.kind == PolicyKind::OptimalFuture {
            optimal_future_allocation(world.trace, params, now)
        } else {
            let view = world.trace.delayed_view(now, params.central_delay);
            central_compute(&view, params, now)
        };
        apply_central_allocation(&mut world.states, &mut world.circuits, &alloc);
        world.baselines = alloc.baselines;
    }

    if policy.kind.uses_distributed() {
        let view = world.trace.delayed_view(now, params.local_delay);
        run_distributed_slot(
            &mut world.states,
            &mut world.circuits,
            &view,
            &world.baselines,
            params,
            now,
        );
    }

    let mut outcome = SlotOutcome {
        optical_bytes: 0,
        optical_bytes_centralized: 0,
        optical_bytes_distributed: 0,
        total_bytes: 0,
        reconfigs: 0,
    };
    for (pair, origin) in world.circuits.pairs() {
        let demand = world.trace.pair_demand(now, pair.lo(), pair.hi());
        let mut cap = params.circuit_cap;
        if opts.reconf_penalty && !world.prev_pairs.contains(&pair) {
            cap -= cap * RECONF_LOSS_NUM / RECONF_LOSS_DEN;
        }
        let served = demand.min(cap);
        outcome.optical_bytes += served;
        match origin {
            CircuitOrigin::Centralized => outcome.optical_bytes_centralized += served,
            CircuitOrigin::Distributed => outcome.optical_bytes_distributed += served,
        }
    }
    for i in 0..params.n {
        for j in (i + 1)..params.n {
            outcome.total_bytes += world.trace.pair_demand(now, i, j);
        }
    }

    let now_pairs: BTreeSet<Pair> = world.circuits.pairs().map(|(p, _)| p).collect();
    outcome.reconfigs = world.prev_pairs.symmetric_difference(&now_pairs).count() as u64;
    world.prev_pairs = now_pairs;

    if opts.validate_each_slot {
        world.circuits.validate();
    }
    outcome
}

/// Run a policy over every recorded slot of a trace.
pub fn run_on_trace(trace: &TrafficTrace, policy: &Policy, opts: &EngineOptions) -> MetricsReport {
    let mut world = World::new(trace, &policy.params);
    let mut report = MetricsReport::default();
    let mut series = SlotSeries::default();

    let slots = trace.horizon() + 1;
    for now in 0..slots {
        let out = step(&mut world, policy, opts, now);
        report.optical_bytes += out.optical_bytes;
        report.optical_bytes_centralized += out.optical_bytes_centralized;
        report.optical_bytes_distributed += out.optical_bytes_distributed;
        report.total_bytes += out.total_bytes;
        report.reconfig_count += out.reconfigs;
        if opts.record_series {
            series.optical_bytes.push(out.optical_bytes);
            series.total_bytes.push(out.total_bytes);
            series.reconfigs.push(out.reconfigs);
        }
    }

    report.slots = slots.max(0) as u64;
    report.electrical_bytes = report.total_bytes - report.optical_bytes;
    report.optical_throughput_ratio = ratio(report.optical_bytes, report.total_bytes);
    let n = policy.params.n as f64;
    let k = policy.params.k as f64;
    if report.slots > 0 {
        let per_slot = report.reconfig_count as f64 / report.slots as f64;
        report.reconfig_ratio_per_slot = per_slot / (n * k / 2.0);
        report.reconfig_ratio_half_n = per_slot / (n / 2.0);
    }
    if opts.record_series {
        report.series = Some(series);
    }
    report
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Synthesize a workload trace sized for the policy's rack count.
pub fn build_workload_trace(
    cfg: &WorkloadConfig,
    dist: &FlowSizeDistribution,
    params: &SchedulerParams,
    horizon: Slot,
) -> TrafficTrace {
    assert_eq!(cfg.racks, params.n, "workload and params disagree on rack count");
    let flows = generate_flows(cfg, dist, horizon);
    build_trace(&flows, params, horizon)
}

/// Generate a workload and run one policy over it.
pub fn run(
    cfg: &WorkloadConfig,
    dist: &FlowSizeDistribution,
    policy: &Policy,
    horizon: Slot,
    opts: &EngineOptions,
) -> MetricsReport {
    let trace = build_workload_trace(cfg, dist, &policy.params, horizon);
    run_on_trace(&trace, policy, opts)
}

/// Run several policies over one shared trace, one report each.
pub fn compare(
    trace: &TrafficTrace,
    policies: &[Policy],
    opts: &EngineOptions,
) -> Vec<MetricsReport> {
    policies.iter().map(|p| run_on_trace(trace, p, opts)).collect()
}

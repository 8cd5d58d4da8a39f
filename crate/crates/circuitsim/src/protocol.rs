//! Per-node distributed scheduler. Each slot every rack keeps the
//! centralized circuits whose observed rate clears a threshold against the
//! rate recorded when they were allocated, requests new circuits to its
//! busiest peers, and answers incoming requests with grants limited by its
//! free port budget. A circuit forms only on a mutual grant. The whole
//! exchange is two message rounds: requests out, grants/denies back.

use std::collections::{BTreeMap, BTreeSet};

use crate::central::EpochBaseline;
use crate::circuits::{CircuitOrigin, CircuitState, NodeId, Pair};
use crate::params::SchedulerParams;
use crate::trace::{DelayedView, Slot};

/// Working state of one rack's scheduler.
///
/// `cur_nodes` mirrors the global circuit state at the start of a round;
/// `centralized_nodes` is fixed when an allocation lands and holds that
/// epoch's allocated neighbors even if circuits to them are later torn
/// down. The remaining fields are per-round scratch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeState {
    pub id: NodeId,
    pub cur_nodes: BTreeSet<NodeId>,
    pub centralized_nodes: BTreeSet<NodeId>,
    pub matched_nodes: BTreeSet<NodeId>,
    pub req_nodes: BTreeSet<NodeId>,
    pub received_reqs: BTreeSet<NodeId>,
    pub granted: BTreeSet<NodeId>,
    pub grants: BTreeSet<NodeId>,
    pub denies: BTreeSet<NodeId>,
    pub grant_sent: bool,
}

impl NodeState {
    pub fn new(id: NodeId) -> Self {
        NodeState { id, ..Default::default() }
    }
}

/// One state per rack, ids 0..n.
pub fn new_states(n: usize) -> Vec<NodeState> {
    (0..n).map(NodeState::new).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Request,
    Grant,
    Deny,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolMessage {
    pub kind: MessageKind,
    pub from: NodeId,
    pub to: NodeId,
    pub slot: Slot,
}

/// Optional per-round instrumentation: a request-drop fault injector
/// (returning true drops the request in transit, exercising the timeout
/// path) and a message log.
#[derive(Default)]
pub struct RoundHooks<'a> {
    pub drop_request: Option<&'a mut dyn FnMut(NodeId, NodeId) -> bool>,
    pub log: Option<&'a mut Vec<ProtocolMessage>>,
}

/// Locally observable rate for the pair (i, j): its bidirectional volume
/// over the `local_window` slots ending `local_delay` slots ago, per slot.
pub fn local_rate(
    view: &DelayedView,
    i: NodeId,
    j: NodeId,
    now: Slot,
    params: &SchedulerParams,
) -> f64 {
    let end = now - params.local_delay as Slot;
    view.window_sum(i, j, end, params.local_window) as f64 / params.local_window as f64
}

/// Keep the centralized circuits still pulling their weight: neighbor p
/// stays matched iff the current local rate is at least alpha times the
/// rate recorded when the circuit was allocated.
pub fn threshold_filter(
    state: &mut NodeState,
    rates: &[f64],
    baselines: &EpochBaseline,
    alpha: f64,
) {
    state.matched_nodes.clear();
    let kept: Vec<NodeId> = state
        .cur_nodes
        .intersection(&state.centralized_nodes)
        .copied()
        .collect();
    for p in kept {
        let pair = Pair::new(state.id, p);
        let base = baselines
            .rate(pair)
            .unwrap_or_else(|| panic!("no baseline for centralized circuit {pair}"));
        if rates[p] >= alpha * base {
            state.matched_nodes.insert(p);
        }
    }
}

/// Pick up to `max_reqs` request targets: the peers with the most
/// bidirectional traffic, skipping matched neighbors and silent peers.
/// Ties break toward the lower node id.
pub fn select_requests(state: &mut NodeState, rates: &[f64], params: &SchedulerParams) {
    state.req_nodes.clear();
    let mut ranked: Vec<NodeId> = (0..rates.len())
        .filter(|&p| p != state.id && rates[p] > 0.0 && !state.matched_nodes.contains(&p))
        .collect();
    ranked.sort_by(|&a, &b| rates[b].total_cmp(&rates[a]).then(a.cmp(&b)));
    state.req_nodes = ranked.into_iter().take(params.max_reqs).collect();
}

/// Answer the requests that arrived this round. Only mutual interest can
/// be granted (the requester must also be one of our own targets), and no
/// more grants go out than ports remain after the matched circuits.
/// Everyone else in the inbox gets a deny.
pub fn grant_phase(
    state: &mut NodeState,
    rates: &[f64],
    k: usize,
) -> (BTreeSet<NodeId>, BTreeSet<NodeId>) {
    let free_links = k.saturating_sub(state.matched_nodes.len());
    let mut candidates: Vec<NodeId> = state
        .req_nodes
        .intersection(&state.received_reqs)
        .copied()
        .collect();
    candidates.sort_by(|&a, &b| rates[b].total_cmp(&rates[a]).then(a.cmp(&b)));
    let granted: BTreeSet<NodeId> = candidates.into_iter().take(free_links).collect();
    let rejected: BTreeSet<NodeId> = state
        .received_reqs
        .difference(&granted)
        .copied()
        .collect();
    state.granted = granted.clone();
    state.grant_sent = true;
    (granted, rejected)
}

/// Commit the round once every request has an answer: circuits form where
/// both sides granted, and anything current that is neither re-won nor
/// matched is torn down. Returns (connects, disconnects) as peer ids.
pub fn execute_decisions(state: &mut NodeState) -> (Vec<NodeId>, Vec<NodeId>) {
    assert!(state.grant_sent, "node {}: executing before sending grants", state.id);
    let answered: BTreeSet<NodeId> = state.grants.union(&state.denies).copied().collect();
    assert_eq!(
        answered, state.req_nodes,
        "node {}: request answers out of sync",
        state.id
    );

    let new_nodes: BTreeSet<NodeId> =
        state.granted.intersection(&state.grants).copied().collect();
    let connects: Vec<NodeId> = new_nodes.difference(&state.cur_nodes).copied().collect();
    let disconnects: Vec<NodeId> = state
        .cur_nodes
        .iter()
        .copied()
        .filter(|p| !new_nodes.contains(p) && !state.matched_nodes.contains(p))
        .collect();

    state.cur_nodes = new_nodes.union(&state.matched_nodes).copied().collect();
    state.req_nodes.clear();
    state.received_reqs.clear();
    state.granted.clear();
    state.grants.clear();
    state.denies.clear();
    state.grant_sent = false;
    (connects, disconnects)
}

/// Reset the circuit fabric to a fresh centralized allocation and point
/// every node's epoch state at its allocated neighbors.
pub fn apply_central_allocation(
    states: &mut [NodeState],
    circuits: &mut CircuitState,
    alloc: &crate::central::CentralAllocation,
) {
    circuits.clear();
    for s in states.iter_mut() {
        s.centralized_nodes.clear();
        s.cur_nodes.clear();
    }
    for &p in &alloc.pairs.pairs {
        circuits
            .connect(p, CircuitOrigin::Centralized)
            .expect("allocation connect on cleared state");
        states[p.lo()].centralized_nodes.insert(p.hi());
        states[p.hi()].centralized_nodes.insert(p.lo());
        states[p.lo()].cur_nodes.insert(p.hi());
        states[p.hi()].cur_nodes.insert(p.lo());
    }
}

/// Run one full slot of the protocol over all nodes, synchronously:
/// threshold filter, request selection, request delivery, grant/deny,
/// timeout fill-in for dropped requests, then commit. Panics if the
/// committed deltas are asymmetric or violate the degree bound.
pub fn run_distributed_slot(
    states: &mut [NodeState],
    circuits: &mut CircuitState,
    view: &DelayedView,
    baselines: &EpochBaseline,
    params: &SchedulerParams,
    now: Slot,
) {
    run_distributed_slot_hooked(
        states,
        circuits,
        view,
        baselines,
        params,
        now,
        &mut RoundHooks::default(),
    );
}

pub fn run_distributed_slot_hooked(
    states: &mut [NodeState],
    circuits: &mut CircuitState,
    view: &DelayedView,
    baselines: &EpochBaseline,
    params: &SchedulerParams,
    now: Slot,
    hooks: &mut RoundHooks,
) {
    let n = params.n;
    assert_eq!(states.len(), n);
    assert_eq!(circuits.num_nodes(), n);

    for s in states.iter_mut() {
        s.cur_nodes = circuits.neighbors(s.id).clone();
    }

    let mut rates = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let r = local_rate(view, i, j, now, params);
            rates[i][j] = r;
            rates[j][i] = r;
        }
    }

    // Round one: decide and deliver requests.
    for i in 0..n {
        threshold_filter(&mut states[i], &rates[i], baselines, params.alpha);
        select_requests(&mut states[i], &rates[i], params);
    }
    for i in 0..n {
        let targets: Vec<NodeId> = states[i].req_nodes.iter().copied().collect();
        for j in targets {
            if let Some(log) = hooks.log.as_deref_mut() {
                log.push(ProtocolMessage { kind: MessageKind::Request, from: i, to: j, slot: now });
            }
            let dropped = hooks.drop_request.as_mut().is_some_and(|f| f(i, j));
            if !dropped {
                states[j].received_reqs.insert(i);
            }
        }
    }

    // Round two: answer everything that arrived.
    let mut responses: Vec<ProtocolMessage> = Vec::new();
    for j in 0..n {
        let (granted, rejected) = grant_phase(&mut states[j], &rates[j], params.k);
        for g in granted {
            responses.push(ProtocolMessage { kind: MessageKind::Grant, from: j, to: g, slot: now });
        }
        for r in rejected {
            responses.push(ProtocolMessage { kind: MessageKind::Deny, from: j, to: r, slot: now });
        }
    }
    for msg in &responses {
        match msg.kind {
            MessageKind::Grant => states[msg.to].grants.insert(msg.from),
            MessageKind::Deny => states[msg.to].denies.insert(msg.from),
            MessageKind::Request => unreachable!(),
        };
    }
    if let Some(log) = hooks.log.as_deref_mut() {
        log.extend(responses);
    }

    // A request lost in transit never gets an answer; treat the silence
    // as a deny at the end of the slot.
    for s in states.iter_mut() {
        let unanswered: Vec<NodeId> = s
            .req_nodes
            .iter()
            .copied()
            .filter(|p| !s.grants.contains(p) && !s.denies.contains(p))
            .collect();
        s.denies.extend(unanswered);
    }

    // Commit. Both endpoints must report every delta or the round was
    // asymmetric, which is a protocol bug.
    let mut connect_counts: BTreeMap<Pair, u8> = BTreeMap::new();
    let mut disconnect_counts: BTreeMap<Pair, u8> = BTreeMap::new();
    for i in 0..n {
        let (connects, disconnects) = execute_decisions(&mut states[i]);
        for p in connects {
            *connect_counts.entry(Pair::new(i, p)).or_insert(0) += 1;
        }
        for p in disconnects {
            *disconnect_counts.entry(Pair::new(i, p)).or_insert(0) += 1;
        }
    }
    for (&p, &c) in &disconnect_counts {
        assert_eq!(c, 2, "asymmetric disconnect of {p}");
        circuits.disconnect(p).expect("disconnect of a missing circuit");
    }
    for (&p, &c) in &connect_counts {
        assert_eq!(c, 2, "asymmetric connect of {p}");
        circuits
            .connect(p, CircuitOrigin::Distributed)
            .expect("connect over budget or duplicate");
    }
    circuits.validate();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::central::CentralAllocation;
    use crate::matching::BMatching;
    use crate::trace::TrafficTrace;

    fn test_params(n: usize, k: usize, max_reqs: usize) -> SchedulerParams {
        let p = SchedulerParams {
            n,
            k,
            max_reqs,
            top_m: n - 1,
            ..SchedulerParams::defaults()
        };
        p.validate().unwrap();
        p
    }

    fn baseline_of(pairs: &[(NodeId, NodeId, f64)]) -> EpochBaseline {
        EpochBaseline {
            rates: pairs.iter().map(|&(a, b, r)| (Pair::new(a, b), r)).collect(),
            epoch_start: 0,
        }
    }

    fn alloc_of(n: usize, k: usize, pairs: &[(NodeId, NodeId, f64)]) -> CentralAllocation {
        CentralAllocation {
            pairs: BMatching {
                pairs: pairs.iter().map(|&(a, b, _)| Pair::new(a, b)).collect(),
                b: k,
            },
            baselines: baseline_of(pairs),
            decided_at: 0,
            effective_at: 0,
        }
    }

    #[test]
    fn local_rate_zero_window_is_zero() {
        let params = test_params(3, 1, 2);
        let mut trace = TrafficTrace::new(3);
        trace.extend_to(6);
        let view = trace.delayed_view(5, params.local_delay);
        assert_eq!(local_rate(&view, 0, 1, 5, &params), 0.0);
    }

    #[test]
    fn local_rate_sums_both_directions() {
        let params = test_params(3, 1, 2);
        let mut trace = TrafficTrace::new(3);
        trace.record(3, 1, 2, 40).unwrap();
        trace.record(3, 2, 1, 10).unwrap();
        trace.extend_to(6);
        let view = trace.delayed_view(5, params.local_delay);
        assert_eq!(local_rate(&view, 1, 2, 5, &params), 50.0);
        assert_eq!(local_rate(&view, 2, 1, 5, &params), 50.0);
    }

    #[test]
    fn local_rate_matches_resummation() {
        use rand::{Rng, SeedableRng};
        let params = SchedulerParams { local_window: 3, ..test_params(4, 1, 2) };
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let mut trace = TrafficTrace::new(4);
        for t in 0..10 {
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        trace.record(t, i, j, rng.random_range(0..1000)).unwrap();
                    }
                }
            }
        }
        let now = 8;
        let view = trace.delayed_view(now, params.local_delay);
        for i in 0..4 {
            for j in (i + 1)..4 {
                let end = now - params.local_delay as Slot;
                let mut sum = 0u64;
                for t in (end - params.local_window as Slot)..end {
                    sum += trace.get(t, i, j) + trace.get(t, j, i);
                }
                assert_eq!(local_rate(&view, i, j, now, &params), sum as f64 / 3.0);
            }
        }
    }

    #[test]
    fn threshold_keeps_and_drops_by_alpha() {
        let baselines = baseline_of(&[(0, 1, 100.0)]);
        let mut state = NodeState::new(0);
        state.cur_nodes.insert(1);
        state.centralized_nodes.insert(1);
        let mut rates = vec![0.0; 4];
        rates[1] = 50.0;

        threshold_filter(&mut state, &rates, &baselines, 0.4);
        assert!(state.matched_nodes.contains(&1), "50 >= 40 keeps the circuit");
        threshold_filter(&mut state, &rates, &baselines, 0.7);
        assert!(state.matched_nodes.is_empty(), "50 < 70 drops it");

        rates[1] = 0.0;
        threshold_filter(&mut state, &rates, &baselines, 0.0);
        assert!(state.matched_nodes.contains(&1), "alpha 0 keeps everything");
    }

    #[test]
    #[should_panic(expected = "no baseline")]
    fn threshold_faults_on_missing_baseline() {
        let mut state = NodeState::new(0);
        state.cur_nodes.insert(1);
        state.centralized_nodes.insert(1);
        threshold_filter(&mut state, &[0.0, 5.0], &EpochBaseline::default(), 0.5);
    }

    #[test]
    fn requests_take_all_peers_when_few_are_active() {
        let params = test_params(5, 1, 3);
        let mut state = NodeState::new(0);
        let mut rates = vec![0.0; 5];
        rates[2] = 5.0;
        select_requests(&mut state, &rates, &params);
        assert_eq!(state.req_nodes, [2].into_iter().collect());
    }

    #[test]
    fn requests_rank_by_volume() {
        let params = test_params(5, 1, 2);
        let mut state = NodeState::new(0);
        let mut rates = vec![0.0; 5];
        rates[2] = 9.0;
        rates[3] = 8.0;
        rates[4] = 7.0;
        select_requests(&mut state, &rates, &params);
        assert_eq!(state.req_nodes, [2, 3].into_iter().collect());
    }

    #[test]
    fn requests_skip_matched_neighbors() {
        let params = test_params(5, 1, 2);
        let mut state = NodeState::new(0);
        state.matched_nodes.insert(2);
        let mut rates = vec![0.0; 5];
        rates[2] = 9.0;
        rates[3] = 8.0;
        rates[4] = 7.0;
        select_requests(&mut state, &rates, &params);
        assert_eq!(state.req_nodes, [3, 4].into_iter().collect());
    }

    #[test]
    fn grant_with_empty_inbox() {
        let mut state = NodeState::new(0);
        let (granted, rejected) = grant_phase(&mut state, &[0.0; 4], 1);
        assert!(granted.is_empty());
        assert!(rejected.is_empty());
        assert!(state.grant_sent);
    }

    #[test]
    fn grant_respects_budget_and_denies_the_rest() {
        let mut state = NodeState::new(0);
        state.req_nodes = [2, 3].into_iter().collect();
        state.received_reqs = [2, 3, 5].into_iter().collect();
        let mut rates = vec![0.0; 6];
        rates[2] = 9.0;
        rates[3] = 8.0;
        rates[5] = 99.0;
        let (granted, rejected) = grant_phase(&mut state, &rates, 1);
        assert_eq!(granted, [2].into_iter().collect());
        assert_eq!(rejected, [3, 5].into_iter().collect(), "non-mutual 5 denied too");
    }

    #[test]
    fn saturated_node_denies_everyone() {
        let mut state = NodeState::new(0);
        state.matched_nodes.insert(1);
        state.req_nodes = [2].into_iter().collect();
        state.received_reqs = [2, 3].into_iter().collect();
        let (granted, rejected) = grant_phase(&mut state, &[0.0, 0.0, 5.0, 4.0], 1);
        assert!(granted.is_empty());
        assert_eq!(rejected, [2, 3].into_iter().collect());
    }

    #[test]
    fn deny_blocks_circuit_and_stale_link_is_torn_down() {
        let mut state = NodeState::new(1);
        state.cur_nodes.insert(0);
        state.req_nodes = [2].into_iter().collect();
        state.granted = [2].into_iter().collect();
        state.denies = [2].into_iter().collect();
        state.grant_sent = true;
        let (connects, disconnects) = execute_decisions(&mut state);
        assert!(connects.is_empty());
        assert_eq!(disconnects, vec![0]);
        assert!(state.cur_nodes.is_empty());
    }

    #[test]
    fn matched_circuits_survive_execution() {
        let mut state = NodeState::new(1);
        state.cur_nodes = [0, 2].into_iter().collect();
        state.matched_nodes = [0].into_iter().collect();
        state.grant_sent = true;
        let (connects, disconnects) = execute_decisions(&mut state);
        assert!(connects.is_empty());
        assert_eq!(disconnects, vec![2]);
        assert_eq!(state.cur_nodes, [0].into_iter().collect());
    }

    #[test]
    #[should_panic(expected = "answers out of sync")]
    fn execute_requires_every_request_answered() {
        let mut state = NodeState::new(0);
        state.req_nodes = [1].into_iter().collect();
        state.grant_sent = true;
        execute_decisions(&mut state);
    }

    fn traced_view(entries: &[(Slot, usize, usize, u64)], n: usize, now: Slot) -> TrafficTrace {
        let mut trace = TrafficTrace::new(n);
        for &(t, i, j, b) in entries {
            trace.record(t, i, j, b).unwrap();
        }
        trace.extend_to(now);
        trace
    }

    #[test]
    fn two_nodes_form_a_circuit_in_one_slot() {
        let params = test_params(2, 1, 2);
        let trace = traced_view(&[(3, 0, 1, 500), (3, 1, 0, 100)], 2, 5);
        let view = trace.delayed_view(5, params.local_delay);
        let mut states = new_states(2);
        let mut circuits = CircuitState::new(2, 1);
        run_distributed_slot(&mut states, &mut circuits, &view, &EpochBaseline::default(), &params, 5);
        assert!(circuits.contains(Pair::new(0, 1)));
        assert_eq!(circuits.origin(Pair::new(0, 1)), Some(CircuitOrigin::Distributed));
        assert_eq!(states[0].cur_nodes, [1].into_iter().collect());
        assert_eq!(states[1].cur_nodes, [0].into_iter().collect());
    }

    #[test]
    fn decoy_request_does_not_break_the_natural_pairing() {
        // Node 0 also requests node 2, but (0,1) and (2,3) carry the
        // heavy traffic and win their mutual grants.
        let params = test_params(4, 1, 2);
        let trace = traced_view(
            &[(3, 0, 1, 100), (3, 0, 2, 50), (3, 2, 3, 80)],
            4,
            5,
        );
        let view = trace.delayed_view(5, params.local_delay);
        let mut states = new_states(4);
        let mut circuits = CircuitState::new(4, 1);
        let mut log = Vec::new();
        let mut hooks = RoundHooks { drop_request: None, log: Some(&mut log) };
        run_distributed_slot_hooked(
            &mut states,
            &mut circuits,
            &view,
            &EpochBaseline::default(),
            &params,
            5,
            &mut hooks,
        );
        let pairs: Vec<Pair> = circuits.pairs().map(|(p, _)| p).collect();
        assert_eq!(pairs, vec![Pair::new(0, 1), Pair::new(2, 3)]);
        assert!(log.contains(&ProtocolMessage { kind: MessageKind::Request, from: 0, to: 2, slot: 5 }));
        assert!(log.contains(&ProtocolMessage { kind: MessageKind::Deny, from: 2, to: 0, slot: 5 }));
    }

    #[test]
    fn huge_alpha_matches_a_run_without_centralized_circuits() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(99);
        let mut trace = TrafficTrace::new(5);
        for t in 0..8 {
            for i in 0..5 {
                for j in 0..5 {
                    if i != j && rng.random_bool(0.5) {
                        trace.record(t, i, j, rng.random_range(1..10_000)).unwrap();
                    }
                }
            }
        }

        let hybrid_params = SchedulerParams { alpha: 1e9, ..test_params(5, 2, 4) };
        let mut hybrid_states = new_states(5);
        let mut hybrid_circuits = CircuitState::new(5, 2);
        let alloc = alloc_of(5, 2, &[(0, 1, 3.0), (2, 3, 7.0)]);
        apply_central_allocation(&mut hybrid_states, &mut hybrid_circuits, &alloc);

        let dist_params = test_params(5, 2, 4);
        let mut dist_states = new_states(5);
        let mut dist_circuits = CircuitState::new(5, 2);

        for now in [5, 6, 7] {
            let view = trace.delayed_view(now, hybrid_params.local_delay);
            run_distributed_slot(
                &mut hybrid_states,
                &mut hybrid_circuits,
                &view,
                &alloc.baselines,
                &hybrid_params,
                now,
            );
            run_distributed_slot(
                &mut dist_states,
                &mut dist_circuits,
                &view,
                &EpochBaseline::default(),
                &dist_params,
                now,
            );
            let h: Vec<Pair> = hybrid_circuits.pairs().map(|(p, _)| p).collect();
            let d: Vec<Pair> = dist_circuits.pairs().map(|(p, _)| p).collect();
            assert_eq!(h, d, "slot {now}");
        }
    }

    #[test]
    fn alpha_zero_preserves_the_allocation_and_fills_residual_degree() {
        let params = test_params(6, 2, 4);
        // Allocated pairs see no traffic at all; (4,5) is busy.
        let trace = traced_view(&[(3, 4, 5, 900), (4, 4, 5, 900), (5, 4, 5, 900)], 6, 7);
        let mut states = new_states(6);
        let mut circuits = CircuitState::new(6, 2);
        let alloc = alloc_of(6, 2, &[(0, 1, 10.0), (2, 3, 20.0)]);
        apply_central_allocation(&mut states, &mut circuits, &alloc);

        for now in [5, 6, 7] {
            let view = trace.delayed_view(now, params.local_delay);
            run_distributed_slot(&mut states, &mut circuits, &view, &alloc.baselines, &params, now);
            assert_eq!(circuits.origin(Pair::new(0, 1)), Some(CircuitOrigin::Centralized));
            assert_eq!(circuits.origin(Pair::new(2, 3)), Some(CircuitOrigin::Centralized));
            assert_eq!(circuits.origin(Pair::new(4, 5)), Some(CircuitOrigin::Distributed));
            assert_eq!(circuits.len(), 3);
        }
    }

    #[test]
    fn quiescence_without_traffic_or_baselines() {
        let params = test_params(4, 2, 5);
        let mut trace = TrafficTrace::new(4);
        trace.extend_to(10);
        let mut states = new_states(4);
        let mut circuits = CircuitState::new(4, 2);
        circuits.connect(Pair::new(0, 3), CircuitOrigin::Distributed).unwrap();

        let mut log = Vec::new();
        for now in [5, 6, 7] {
            let view = trace.delayed_view(now, params.local_delay);
            let mut hooks = RoundHooks { drop_request: None, log: Some(&mut log) };
            run_distributed_slot_hooked(
                &mut states,
                &mut circuits,
                &view,
                &EpochBaseline::default(),
                &params,
                now,
                &mut hooks,
            );
            assert!(circuits.is_empty(), "stale circuit gone, nothing new");
        }
        assert!(log.is_empty(), "silence produces no messages");
    }

    #[test]
    fn message_log_is_two_rounds_and_bounded() {
        use rand::{Rng, SeedableRng};
        let params = test_params(6, 2, 4);
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let mut trace = TrafficTrace::new(6);
        for t in 0..8 {
            for i in 0..6 {
                for j in 0..6 {
                    if i != j && rng.random_bool(0.6) {
                        trace.record(t, i, j, rng.random_range(1..500)).unwrap();
                    }
                }
            }
        }
        let view = trace.delayed_view(6, params.local_delay);
        let mut states = new_states(6);
        let mut circuits = CircuitState::new(6, 2);
        let mut log = Vec::new();
        let mut hooks = RoundHooks { drop_request: None, log: Some(&mut log) };
        run_distributed_slot_hooked(
            &mut states,
            &mut circuits,
            &view,
            &EpochBaseline::default(),
            &params,
            6,
            &mut hooks,
        );

        let requests = log.iter().filter(|m| m.kind == MessageKind::Request).count();
        let responses = log.len() - requests;
        assert!(requests <= params.n * params.max_reqs);
        assert_eq!(responses, requests, "one answer per delivered request");
        let first_response = log.iter().position(|m| m.kind != MessageKind::Request).unwrap();
        assert!(
            log[first_response..].iter().all(|m| m.kind != MessageKind::Request),
            "all requests precede all responses"
        );
    }

    #[test]
    fn dropped_request_prevents_the_circuit_symmetrically() {
        let params = test_params(2, 1, 2);
        let trace = traced_view(&[(3, 0, 1, 500)], 2, 5);
        let view = trace.delayed_view(5, params.local_delay);
        let mut states = new_states(2);
        let mut circuits = CircuitState::new(2, 1);
        let mut drop = |from: NodeId, _to: NodeId| from == 0;
        let mut hooks = RoundHooks { drop_request: Some(&mut drop), log: None };
        run_distributed_slot_hooked(
            &mut states,
            &mut circuits,
            &view,
            &EpochBaseline::default(),
            &params,
            5,
            &mut hooks,
        );
        assert!(circuits.is_empty());
        assert!(states[0].cur_nodes.is_empty());
        assert!(states[1].cur_nodes.is_empty());
    }
}

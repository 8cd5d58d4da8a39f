//! Centralized epoch scheduler: every `epoch` slots it sums demand over a
//! delayed aggregation window, truncates each node's report to its top-m
//! edges, approximates a maximum weight b-matching, and publishes the
//! allocation together with the per-pair rate baselines that the
//! distributed layer later thresholds against.

use std::collections::BTreeMap;

use crate::circuits::Pair;
use crate::matching::{iterated_b_matching, top_m_truncate, BMatching, DemandGraph};
use crate::params::SchedulerParams;
use crate::trace::{DelayedView, Slot};

/// Per-pair demand rates captured when a centralized allocation lands.
/// Defined exactly on the allocated pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpochBaseline {
    pub rates: BTreeMap<Pair, f64>,
    pub epoch_start: Slot,
}

impl EpochBaseline {
    pub fn rate(&self, p: Pair) -> Option<f64> {
        self.rates.get(&p).copied()
    }
}

/// One centralized scheduling decision.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralAllocation {
    pub pairs: BMatching,
    pub baselines: EpochBaseline,
    pub decided_at: Slot,
    pub effective_at: Slot,
}

/// Build the demand graph seen through `view` over the `len` slots ending
/// at `end` (exclusive) and keep only positive-weight edges.
pub fn demand_graph_from_view(view: &DelayedView, end: Slot, len: u64) -> DemandGraph {
    let n = view.num_racks();
    let mut g = DemandGraph::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            g.add_weight(i, j, view.window_sum(i, j, end, len));
        }
    }
    g
}

/// Compute the allocation that lands at slot `now` (an epoch boundary).
///
/// The engine hands in a view delayed by `central_delay`, so the weights
/// cover the window [now - delay - window, now - delay): the freshest data
/// a delayed controller can have. Baselines are the window rates w/A of
/// exactly the allocated pairs, always positive because zero-weight edges
/// never enter the graph.
pub fn central_compute(
    view: &DelayedView,
    params: &SchedulerParams,
    now: Slot,
) -> CentralAllocation {
    assert!(now % params.epoch as Slot == 0, "not an epoch boundary: {}", now);
    assert!(
        view.bound() <= now - params.central_delay as Slot,
        "view exposes data fresher than the centralized delay permits"
    );
    let end = now - params.central_delay as Slot;
    let graph = demand_graph_from_view(view, end, params.central_window);
    let truncated = top_m_truncate(&graph, params.top_m);
    let pairs = iterated_b_matching(&truncated, params.k);

    let mut rates = BTreeMap::new();
    for &p in &pairs.pairs {
        let w = truncated.weight(p.lo(), p.hi());
        rates.insert(p, w as f64 / params.central_window as f64);
    }
    CentralAllocation {
        pairs,
        baselines: EpochBaseline { rates, epoch_start: now },
        decided_at: now - params.central_delay as Slot,
        effective_at: now,
    }
}

/// Epoch boundaries in [0, horizon) with their decision slots. Early
/// epochs have negative decision slots: their windows fall before slot 0
/// and read as zeros.
pub fn epoch_schedule(params: &SchedulerParams, horizon: Slot) -> Vec<(Slot, Slot)> {
    (0..horizon)
        .step_by(params.epoch as usize)
        .map(|apply| (apply - params.central_delay as Slot, apply))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::mwm_oracle;
    use crate::trace::TrafficTrace;

    fn params_n4k1() -> SchedulerParams {
        SchedulerParams {
            n: 4,
            k: 1,
            max_reqs: 2,
            top_m: 3,
            ..SchedulerParams::defaults()
        }
    }

    #[test]
    fn schedule_arithmetic() {
        let p = SchedulerParams::defaults(); // epoch 3, delay 3
        let sched = epoch_schedule(&p, 12);
        assert_eq!(sched, vec![(-3, 0), (0, 3), (3, 6), (6, 9)]);
        // The allocation landing at 9 consumes the window [3, 6).
        let apply = 9;
        let end = apply - p.central_delay as Slot;
        assert_eq!((end - p.central_window as Slot, end), (3, 6));
    }

    #[test]
    fn cold_start_is_empty() {
        let p = params_n4k1();
        let mut trace = TrafficTrace::new(4);
        trace.record(0, 0, 1, 1_000_000).unwrap();
        let view = trace.delayed_view(0, p.central_delay);
        let alloc = central_compute(&view, &p, 0);
        assert!(alloc.pairs.pairs.is_empty());
        assert!(alloc.baselines.rates.is_empty());
        assert_eq!(alloc.effective_at, 0);
    }

    #[test]
    fn zero_window_yields_empty_allocation() {
        let p = params_n4k1();
        let mut trace = TrafficTrace::new(4);
        trace.extend_to(8);
        let view = trace.delayed_view(9, p.central_delay);
        let alloc = central_compute(&view, &p, 9);
        assert!(alloc.pairs.pairs.is_empty());
        assert!(alloc.baselines.rates.is_empty());
    }

    #[test]
    fn picks_heavy_pairs_and_records_baselines() {
        // Window for the allocation landing at 9 is slots {3,4,5}.
        let p = params_n4k1();
        let mut trace = TrafficTrace::new(4);
        trace.record(3, 0, 1, 60).unwrap();
        trace.record(3, 2, 3, 80).unwrap();
        trace.record(4, 1, 0, 40).unwrap();
        trace.record(5, 0, 2, 10).unwrap();
        // Decoy traffic at and after the visibility bound must not leak in.
        trace.record(6, 0, 2, 1_000_000).unwrap();
        trace.record(7, 1, 2, 1_000_000).unwrap();
        trace.extend_to(8);

        let view = trace.delayed_view(9, p.central_delay);
        let alloc = central_compute(&view, &p, 9);
        let want: std::collections::BTreeSet<Pair> =
            [Pair::new(0, 1), Pair::new(2, 3)].into_iter().collect();
        assert_eq!(alloc.pairs.pairs, want);
        assert_eq!(alloc.pairs.b, 1);
        assert_eq!(alloc.baselines.rate(Pair::new(0, 1)), Some(100.0 / 3.0));
        assert_eq!(alloc.baselines.rate(Pair::new(2, 3)), Some(80.0 / 3.0));
        assert_eq!(alloc.baselines.epoch_start, 9);
        assert_eq!(alloc.decided_at, 6);

        // The same graph through the exhaustive oracle.
        let g = demand_graph_from_view(&view, 6, 3);
        assert_eq!(mwm_oracle(&g).pairs, want);
    }

    #[test]
    fn baselines_match_window_rates_on_random_traces() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(21);
        let p = SchedulerParams { n: 6, k: 2, top_m: 3, ..SchedulerParams::defaults() };
        let mut trace = TrafficTrace::new(6);
        for t in 0..30 {
            for i in 0..6 {
                for j in 0..6 {
                    if i != j && rng.random_bool(0.4) {
                        trace.record(t, i, j, rng.random_range(0..5_000)).unwrap();
                    }
                }
            }
        }
        for now in [9, 18, 27] {
            let view = trace.delayed_view(now, p.central_delay);
            let alloc = central_compute(&view, &p, now);
            let end = now - p.central_delay as Slot;
            for (&pair, &r) in &alloc.baselines.rates {
                let w = trace.window_sum(pair.lo(), pair.hi(), end, p.central_window);
                assert!(w > 0);
                assert_eq!(r, w as f64 / p.central_window as f64);
            }
            assert_eq!(alloc.baselines.rates.len(), alloc.pairs.pairs.len());
        }
    }

    #[test]
    fn truncation_to_one_report_can_lose_matching_weight() {
        // Nodes 1 and 2 both nominate their edge to node 0, so the (1,2)
        // edge vanishes from the controller graph at m=1 and the matching
        // falls back to a single pair.
        let p = SchedulerParams {
            n: 5,
            k: 1,
            top_m: 1,
            max_reqs: 2,
            ..SchedulerParams::defaults()
        };
        let mut trace = TrafficTrace::new(5);
        trace.record(3, 0, 1, 10).unwrap();
        trace.record(3, 0, 2, 9).unwrap();
        trace.record(4, 1, 2, 8).unwrap();
        trace.record(4, 0, 3, 7).unwrap();
        trace.extend_to(8);
        let view = trace.delayed_view(9, p.central_delay);

        let truncated = central_compute(&view, &p, 9);
        assert_eq!(
            truncated.pairs.pairs,
            [Pair::new(0, 1)].into_iter().collect()
        );

        let full = central_compute(&view, &SchedulerParams { top_m: 4, ..p }, 9);
        assert_eq!(
            full.pairs.pairs,
            [Pair::new(0, 3), Pair::new(1, 2)].into_iter().collect()
        );
        assert!(full.pairs.total_weight(&demand_graph_from_view(&view, 6, 3)) > 10);
    }

    #[test]
    fn no_lookahead_beyond_the_delay() {
        use rand::{Rng, SeedableRng};
        let p = SchedulerParams { n: 6, k: 2, top_m: 3, ..SchedulerParams::defaults() };
        let now: Slot = 9;
        let visible_until = now - p.central_delay as Slot; // slots < 6 visible
        let mut base = TrafficTrace::new(6);
        let mut perturbed = TrafficTrace::new(6);
        let mut rng = rand::rngs::StdRng::seed_from_u64(33);
        for t in 0..9 {
            for i in 0..6 {
                for j in 0..6 {
                    if i == j {
                        continue;
                    }
                    let v = rng.random_range(0..10_000);
                    base.record(t, i, j, v).unwrap();
                    let w = if t >= visible_until { rng.random_range(0..10_000) } else { v };
                    perturbed.record(t, i, j, w).unwrap();
                }
            }
        }
        let a = central_compute(&base.delayed_view(now, p.central_delay), &p, now);
        let b = central_compute(&perturbed.delayed_view(now, p.central_delay), &p, now);
        assert_eq!(a, b);
    }

    #[test]
    #[should_panic(expected = "fresher")]
    fn rejects_views_with_too_little_delay() {
        let p = params_n4k1();
        let mut trace = TrafficTrace::new(4);
        trace.extend_to(8);
        let view = trace.delayed_view(9, 1);
        central_compute(&view, &p, 9);
    }
}

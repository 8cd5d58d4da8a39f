use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::circuits::NodeId;

/// Slot index. Signed so that scheduler window arithmetic
/// (`now - delay - window`) stays well-defined near the start of a run;
/// slots before 0 simply hold no traffic.
pub type Slot = i64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("self-traffic is not modeled (rack {0})")]
    SelfTraffic(NodeId),
    #[error("rack {0} out of range (n={1})")]
    RackOutOfRange(NodeId, usize),
    #[error("slot {t} precedes the recording horizon {horizon}; the trace is append-only")]
    PastHorizon { t: Slot, horizon: Slot },
    #[error("negative slot {0}")]
    NegativeSlot(Slot),
}

/// Per-slot demand matrix store: bytes sent from rack i to rack j in slot t.
///
/// Slots strictly before the horizon are frozen; the horizon slot still
/// accepts additional bytes (multiple flows land in the same slot).
#[derive(Debug, Clone)]
pub struct TrafficTrace {
    n: usize,
    // One dense n*n row-major matrix per slot.
    slots: Vec<Vec<u64>>,
}

impl TrafficTrace {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "need at least two racks");
        TrafficTrace { n, slots: Vec::new() }
    }

    pub fn num_racks(&self) -> usize {
        self.n
    }

    /// Last recorded slot, or -1 for an empty trace.
    pub fn horizon(&self) -> Slot {
        self.slots.len() as Slot - 1
    }

    /// Number of recorded slots.
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Add `bytes` to the (t, i, j) cell. Accepts the current horizon slot
    /// or any later slot (skipped slots stay all-zero); writes into the past
    /// are rejected.
    pub fn record(&mut self, t: Slot, i: NodeId, j: NodeId, bytes: u64) -> Result<(), TraceError> {
        if t < 0 {
            return Err(TraceError::NegativeSlot(t));
        }
        if i == j {
            return Err(TraceError::SelfTraffic(i));
        }
        if i >= self.n {
            return Err(TraceError::RackOutOfRange(i, self.n));
        }
        if j >= self.n {
            return Err(TraceError::RackOutOfRange(j, self.n));
        }
        if t < self.horizon() {
            return Err(TraceError::PastHorizon { t, horizon: self.horizon() });
        }
        self.extend_to(t);
        self.slots[t as usize][i * self.n + j] += bytes;
        Ok(())
    }

    /// Advance the horizon to at least `t`, materializing zero slots.
    pub fn extend_to(&mut self, t: Slot) {
        assert!(t >= 0);
        while self.horizon() < t {
            self.slots.push(vec![0; self.n * self.n]);
        }
    }

    /// Bytes sent from i to j in slot t; slots outside the trace hold 0.
    pub fn get(&self, t: Slot, i: NodeId, j: NodeId) -> u64 {
        debug_assert!(i < self.n && j < self.n);
        if t < 0 || t > self.horizon() {
            return 0;
        }
        self.slots[t as usize][i * self.n + j]
    }

    /// Bidirectional demand of the unordered pair {i, j} in slot t.
    pub fn pair_demand(&self, t: Slot, i: NodeId, j: NodeId) -> u64 {
        self.get(t, i, j) + self.get(t, j, i)
    }

    /// Sum of X(i,j) + X(j,i) over the half-open slot window
    /// [end - len, end). Slots before 0 contribute nothing.
    ///
    /// Reading past recorded history is a caller bug: `end` may not exceed
    /// horizon + 1.
    pub fn window_sum(&self, i: NodeId, j: NodeId, end: Slot, len: u64) -> u64 {
        assert!(len >= 1, "window length must be at least 1");
        assert!(
            end <= self.horizon() + 1,
            "window end {} reads past recorded horizon {}",
            end,
            self.horizon()
        );
        let lo = (end - len as Slot).max(0);
        let hi = end.max(0);
        (lo..hi).map(|t| self.pair_demand(t, i, j)).sum()
    }

    /// Total bytes across all slots and rack pairs.
    pub fn total_bytes(&self) -> u64 {
        self.slots.iter().map(|m| m.iter().sum::<u64>()).sum()
    }

    /// Read-only view exposing only slots strictly before `now - delay`.
    pub fn delayed_view(&self, now: Slot, delay: u64) -> DelayedView<'_> {
        DelayedView { trace: self, bound: now - delay as Slot }
    }

    /// Dump as CSV with header `slot,src,dst,bytes`; zero cells are omitted.
    pub fn dump_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["slot", "src", "dst", "bytes"])?;
        for (t, matrix) in self.slots.iter().enumerate() {
            for i in 0..self.n {
                for j in 0..self.n {
                    let bytes = matrix[i * self.n + j];
                    if bytes > 0 {
                        out.write_record([
                            t.to_string(),
                            i.to_string(),
                            j.to_string(),
                            bytes.to_string(),
                        ])?;
                    }
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn dump_csv_file(&self, path: &Path) -> anyhow::Result<()> {
        let f = std::fs::File::create(path)?;
        self.dump_csv(std::io::BufWriter::new(f))?;
        Ok(())
    }

    /// Load a trace previously written by `dump_csv`. Rows must be grouped
    /// by non-decreasing slot (the dump format guarantees this).
    pub fn load_csv<R: Read>(n: usize, r: R, horizon: Slot) -> anyhow::Result<Self> {
        let mut trace = TrafficTrace::new(n);
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "slot,src,dst,bytes" => {}
            other => anyhow::bail!("bad trace header: {:?}", other),
        }
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let mut field = |name: &str| {
                parts
                    .next()
                    .ok_or_else(|| anyhow::anyhow!("missing field {name} in row {line:?}"))
            };
            let t: Slot = field("slot")?.trim().parse()?;
            let i: NodeId = field("src")?.trim().parse()?;
            let j: NodeId = field("dst")?.trim().parse()?;
            let bytes: u64 = field("bytes")?.trim().parse()?;
            trace.record(t, i, j, bytes)?;
        }
        if horizon >= 0 {
            trace.extend_to(horizon);
        }
        Ok(trace)
    }

    pub fn load_csv_file(n: usize, path: &Path, horizon: Slot) -> anyhow::Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::load_csv(n, f, horizon)
    }
}

/// Read-only window onto a trace that refuses to serve slots at or past
/// its visibility bound. Schedulers receive these instead of the raw
/// trace so that a scheduler reading fresher data than its configured
/// delay trips a hard fault instead of silently cheating.
#[derive(Debug, Clone, Copy)]
pub struct DelayedView<'a> {
    trace: &'a TrafficTrace,
    bound: Slot,
}

impl<'a> DelayedView<'a> {
    /// First invisible slot: accesses must stay strictly below this.
    pub fn bound(&self) -> Slot {
        self.bound
    }

    pub fn num_racks(&self) -> usize {
        self.trace.num_racks()
    }

    pub fn get(&self, t: Slot, i: NodeId, j: NodeId) -> u64 {
        assert!(
            t < self.bound,
            "visibility violation: slot {} is not yet observable (bound {})",
            t,
            self.bound
        );
        self.trace.get(t, i, j)
    }

    pub fn pair_demand(&self, t: Slot, i: NodeId, j: NodeId) -> u64 {
        self.get(t, i, j) + self.get(t, j, i)
    }

    /// Bidirectional window sum as on the raw trace, restricted to
    /// visible slots. The whole window [end - len, end) must be visible.
    pub fn window_sum(&self, i: NodeId, j: NodeId, end: Slot, len: u64) -> u64 {
        assert!(
            end <= self.bound,
            "visibility violation: window ending at {} exceeds bound {}",
            end,
            self.bound
        );
        let lo = (end - len as Slot).max(0);
        (lo..end.max(0)).map(|t| self.pair_demand(t, i, j)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn store_and_load_identity() {
        let mut tr = TrafficTrace::new(4);
        tr.record(0, 1, 2, 500).unwrap();
        assert_eq!(tr.get(0, 1, 2), 500);
        assert_eq!(tr.get(0, 2, 1), 0);
    }

    #[test]
    fn records_accumulate() {
        let mut tr = TrafficTrace::new(4);
        tr.record(0, 1, 2, 300).unwrap();
        tr.record(0, 1, 2, 200).unwrap();
        assert_eq!(tr.get(0, 1, 2), 500);
    }

    #[test]
    fn self_traffic_rejected() {
        let mut tr = TrafficTrace::new(4);
        assert_eq!(tr.record(0, 3, 3, 10), Err(TraceError::SelfTraffic(3)));
    }

    #[test]
    fn past_writes_rejected() {
        let mut tr = TrafficTrace::new(4);
        tr.record(2, 0, 1, 5).unwrap();
        assert_eq!(
            tr.record(1, 0, 1, 5),
            Err(TraceError::PastHorizon { t: 1, horizon: 2 })
        );
        // The horizon slot itself still accepts bytes.
        tr.record(2, 0, 1, 5).unwrap();
    }

    #[test]
    fn window_sum_zero_trace() {
        let mut tr = TrafficTrace::new(4);
        tr.extend_to(10);
        assert_eq!(tr.window_sum(0, 1, 8, 4), 0);
        assert_eq!(tr.window_sum(2, 3, 0, 7), 0);
    }

    #[test]
    fn window_sum_direct() {
        let mut tr = TrafficTrace::new(4);
        for t in 4..8 {
            tr.record(t, 1, 2, 10).unwrap();
        }
        assert_eq!(tr.window_sum(1, 2, 8, 4), 40);
        assert_eq!(tr.window_sum(2, 1, 8, 4), 40); // pair is unordered
        assert_eq!(tr.window_sum(1, 2, 8, 2), 20);
    }

    #[test]
    fn window_clips_at_zero() {
        let mut tr = TrafficTrace::new(3);
        tr.record(0, 0, 1, 7).unwrap();
        tr.extend_to(1);
        assert_eq!(tr.window_sum(0, 1, 1, 100), 7);
        assert_eq!(tr.window_sum(0, 1, 0, 5), 0);
        assert_eq!(tr.window_sum(0, 1, -2, 5), 0);
    }

    #[test]
    fn delayed_view_boundary() {
        let mut tr = TrafficTrace::new(3);
        tr.extend_to(9);
        let view = tr.delayed_view(10, 3);
        // t' < now - delay = 7: slot 6 readable.
        assert_eq!(view.get(6, 0, 1), 0);
    }

    #[test]
    #[should_panic(expected = "visibility violation")]
    fn delayed_view_faults_past_bound() {
        let mut tr = TrafficTrace::new(3);
        tr.extend_to(9);
        let view = tr.delayed_view(10, 3);
        let _ = view.get(7, 0, 1);
    }

    #[test]
    fn delayed_view_degenerate_delay() {
        let mut tr = TrafficTrace::new(3);
        tr.record(9, 0, 1, 3).unwrap();
        let view = tr.delayed_view(10, 0);
        assert_eq!(view.get(9, 0, 1), 3);
        assert_eq!(view.window_sum(0, 1, 10, 10), 3);
    }

    #[test]
    fn view_readable_sets_nest_by_delay() {
        let mut tr = TrafficTrace::new(3);
        tr.extend_to(20);
        for d1 in 0..6u64 {
            for d2 in 0..=d1 {
                let v1 = tr.delayed_view(15, d1);
                let v2 = tr.delayed_view(15, d2);
                assert!(v1.bound() <= v2.bound());
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut tr = TrafficTrace::new(5);
        tr.record(0, 1, 2, 500).unwrap();
        tr.record(3, 4, 0, 123).unwrap();
        tr.record(3, 0, 4, 7).unwrap();
        tr.extend_to(6);
        let mut buf = Vec::new();
        tr.dump_csv(&mut buf).unwrap();
        let loaded = TrafficTrace::load_csv(5, buf.as_slice(), tr.horizon()).unwrap();
        assert_eq!(loaded.horizon(), tr.horizon());
        for t in 0..=tr.horizon() {
            for i in 0..5 {
                for j in 0..5 {
                    if i != j {
                        assert_eq!(loaded.get(t, i, j), tr.get(t, i, j));
                    }
                }
            }
        }
    }
}

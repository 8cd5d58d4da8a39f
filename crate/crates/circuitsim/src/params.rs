use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scheduler and topology parameters shared by every policy.
///
/// Times are integer slots; a slot is `slot_len` seconds (1 ms by default).
/// `circuit_cap` is the per-slot byte capacity of one optical circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerParams {
    /// Number of ToR nodes.
    pub n: usize,
    /// Optical degree: simultaneous circuits per node.
    pub k: usize,
    /// Centralized epoch length in slots.
    pub epoch: u64,
    /// Centralized information/decision delay in slots.
    pub central_delay: u64,
    /// Distributed information delay in slots.
    pub local_delay: u64,
    /// Centralized aggregation window in slots.
    pub central_window: u64,
    /// Distributed aggregation window in slots.
    pub local_window: u64,
    /// Threshold factor for keeping a centrally allocated circuit.
    pub alpha: f64,
    /// Top-m edges each node reports to the central scheduler.
    pub top_m: usize,
    /// Request budget per node per round; must exceed `k`.
    pub max_reqs: usize,
    /// Seconds per slot.
    pub slot_len: f64,
    /// Bytes one circuit can carry per slot.
    pub circuit_cap: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("n must be at least 2 (got {0})")]
    TooFewNodes(usize),
    #[error("optical degree k must satisfy 1 <= k < n (got k={k}, n={n})")]
    BadDegree { k: usize, n: usize },
    #[error("epoch must be at least 1")]
    ZeroEpoch,
    #[error("central_delay must be >= local_delay (got {central} < {local})")]
    DelayOrder { central: u64, local: u64 },
    #[error("aggregation windows must be at least 1 slot")]
    ZeroWindow,
    #[error("alpha must be >= 0 and finite (got {0})")]
    BadAlpha(f64),
    #[error("top_m must satisfy 1 <= m <= n-1 (got m={m}, n={n})")]
    BadTopM { m: usize, n: usize },
    #[error("max_reqs must exceed k (got max_reqs={max_reqs}, k={k})")]
    BadMaxReqs { max_reqs: usize, k: usize },
    #[error("slot_len must be positive")]
    BadSlotLen,
    #[error("circuit_cap must be positive")]
    ZeroCap,
}

impl SchedulerParams {
    /// Defaults for the fast desk-scale profile: 16 racks, degree 4,
    /// 1 ms slots, centralized epoch/delay/window of 3 slots with top-5
    /// reporting, distributed delay/window of 1 slot.
    pub fn defaults() -> Self {
        let slot_len = 1e-3;
        SchedulerParams {
            n: 16,
            k: 4,
            epoch: 3,
            central_delay: 3,
            local_delay: 1,
            central_window: 3,
            local_window: 1,
            alpha: 0.0,
            top_m: 5,
            max_reqs: 8,
            slot_len,
            // One circuit runs at 10 Gbps.
            circuit_cap: (10e9 / 8.0 * slot_len) as u64,
        }
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.n < 2 {
            return Err(ParamsError::TooFewNodes(self.n));
        }
        if self.k < 1 || self.k >= self.n {
            return Err(ParamsError::BadDegree { k: self.k, n: self.n });
        }
        if self.epoch < 1 {
            return Err(ParamsError::ZeroEpoch);
        }
        if self.central_delay < self.local_delay {
            return Err(ParamsError::DelayOrder {
                central: self.central_delay,
                local: self.local_delay,
            });
        }
        if self.central_window < 1 || self.local_window < 1 {
            return Err(ParamsError::ZeroWindow);
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(ParamsError::BadAlpha(self.alpha));
        }
        if self.top_m < 1 || self.top_m > self.n - 1 {
            return Err(ParamsError::BadTopM { m: self.top_m, n: self.n });
        }
        if self.max_reqs <= self.k {
            return Err(ParamsError::BadMaxReqs { max_reqs: self.max_reqs, k: self.k });
        }
        if !(self.slot_len > 0.0) {
            return Err(ParamsError::BadSlotLen);
        }
        if self.circuit_cap == 0 {
            return Err(ParamsError::ZeroCap);
        }
        Ok(())
    }
}

impl Default for SchedulerParams {
    fn default() -> Self {
        Self::defaults()
    }
}

//! Flow-level, slotted-time simulator for hybrid electrical/optical
//! datacenter networks.
//!
//! Racks talk over a fixed electrical fabric plus a small number of
//! reconfigurable optical circuits per rack (the optical degree `k`).
//! This crate synthesizes rack-to-rack traffic, schedules the circuits
//! with centralized (delayed maximum-weight b-matching), distributed
//! (request/grant protocol), or hybrid (threshold-gated) schedulers, and
//! measures how many bytes the circuits carry.
//!
//! Layout:
//! - [`params`]: scheduler and timing parameters shared by every layer.
//! - [`trace`]: the per-slot demand matrix and delay-respecting views.
//! - [`circuits`]: the symmetric, degree-bounded circuit set.
//! - [`matching`]: demand graphs, exact maximum weight matching, top-m
//!   truncation, iterated b-matching.
//! - [`traffic`]: Poisson arrivals, heavy-tailed flow sizes, the fluid
//!   transmission model that fills a trace.
//! - [`central`]: the epoch-based centralized scheduler.
//! - [`protocol`]: the per-slot distributed request/grant/deny protocol.
//! - [`engine`]: the simulation loop and metrics.
//! - [`config`] / [`report`]: run configuration and CSV output.

pub mod params;
pub mod trace;
pub mod circuits;
mod blossom;
pub mod central;
pub mod cli;
pub mod config;
pub mod engine;
pub mod matching;
pub mod protocol;
pub mod report;
pub mod traffic;

pub use circuits::{CircuitOrigin, CircuitState, NodeId, Pair};
pub use params::SchedulerParams;
pub use trace::{DelayedView, Slot, TrafficTrace};

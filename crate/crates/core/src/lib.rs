//! Frame/slot random-access simulator for machine-type devices (MTDs)
//! contending for uplink slots at a base station, under spatially
//! correlated packet generation.
//!
//! Time is divided into frames of `K` slots. Every device holding a packet
//! picks one slot per frame from a per-attempt probability row; collisions
//! erase all packets in the slot, lone transmissions always succeed and are
//! acknowledged in unicast. Three slot-selection schemes are provided:
//!
//! * **LRI** — a linear reward-inaction learning automaton per device that
//!   reinforces rewarded slots and converges to a pure assignment,
//! * **S-ALOHA** — uniform random slot choice, no learning,
//! * **MMPC-style** — a centralized greedy anti-affinity assignment built
//!   from estimated pairwise activation correlations (β = 1 only).
//!
//! Traffic is a space-time Poisson process: active frames arrive at rate
//! `μ`, events land uniformly in a square arena at spatial rate `λ`, and
//! every device within the activation radius of an event generates a packet.
//!
//! The [`harness`] module runs seeded replications and parameter sweeps and
//! exports CSV/JSON results; the `ra-sim` binary exposes it as a CLI.

pub mod baselines;
pub mod config;
pub mod engine;
pub mod export;
pub mod harness;
pub mod metrics;
pub mod rng;
pub mod strategy;
pub mod traffic;

pub use config::{BufferPolicy, Scheme, SimConfig};
pub use engine::{Engine, FrameRecord};
pub use metrics::MetricsReport;
pub use strategy::StrategyMatrix;
pub use traffic::Arena;

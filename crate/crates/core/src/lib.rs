//! Simulation and closed-form bound evaluation for all-to-all broadcast in
//! cell-partitioned wireless networks under IID per-slot mobility.
//!
//! The crate is organised around five layers:
//!
//! - [`meg`]: model-agnostic flooding over a sequence of graph snapshots
//!   (Markov evolving graphs), plus expander-property checks.
//! - [`mobility`]: the cell-partitioned IID mobility model, the induced
//!   co-cell snapshots, the single-packet flooding simulator and an exact
//!   absorbing-chain oracle for expected flooding time.
//! - [`analytics`]: closed-form capacity/delay bounds, flooding-time bound
//!   evaluators and concentration inequalities.
//! - [`schemes`]: end-to-end simulators for FCFS packet flooding and the
//!   single-hop scheme, with their queueing formulas.
//! - [`harness`]: service-duration calibration, experiment sweeps, scaling
//!   fits, and the CSV/JSON reporting surface used by the CLI.

pub mod analytics;
pub mod error;
pub mod harness;
pub mod meg;
pub mod mobility;
pub mod schemes;
pub mod stats;

pub use error::{Error, Result};

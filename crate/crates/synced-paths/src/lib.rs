//! Deterministic simulator for bumpless switching between parallel control
//! paths.
//!
//! Several controllers run side by side against a cascade of plant stages.
//! One path drives the plant at a time; the others are kept synchronized by
//! feeding them the gated difference between the active output and their own,
//! so that integral action parks each idle path at the active operating
//! point. When a switch gate flips, the incoming path takes over from a state
//! that already matches the running process, and the control signal crosses
//! over without a bump.
//!
//! The crate is organized around a text scenario format ([`scenario`]), a
//! fixed-step closed-loop integrator ([`sim`]), CSV traces ([`trace`]), and
//! switching quality metrics ([`metrics`]). Runs are bit-for-bit
//! reproducible: the same scenario always yields the same CSV.
//!
//! ```
//! use synced_paths::{scenario::Scenario, sim::ClosedLoopSim};
//!
//! let mut scenario = Scenario::builtin("example1")?;
//! scenario.sim.t_end = 2.0; // keep the doc run short
//! let trace = ClosedLoopSim::new(&scenario, true)?.run()?;
//! assert_eq!(trace.len(), 201);
//! # Ok::<(), synced_paths::Error>(())
//! ```

pub mod cli;
pub mod error;
pub mod gating;
pub mod lti;
pub mod metrics;
pub mod scenario;
pub mod sim;
pub mod sync;
pub mod trace;

pub use error::{Error, Result};

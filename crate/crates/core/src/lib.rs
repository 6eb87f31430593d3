//! Safe policy synthesis for multi-agent POMDPs via discrete-time barrier
//! functions.
//!
//! The crate is organized around four pieces:
//!
//! * [`model`] — the multi-agent POMDP tuple, exact joint-belief Bayes filtering,
//!   expected rewards, and seeded ground-truth simulation.
//! * [`dtbf`] — barrier functions over beliefs (or any state type), gain
//!   functions, Boolean min/max composition, and trace-level invariance
//!   verification with the geometric decay floor.
//! * [`planner`] — the one-step greedy safe planner, its per-agent variant,
//!   the safety filter over a nominal policy, and the closed mission loop.
//! * [`gridworld`] — a heterogeneous three-robot exploration scenario on a
//!   grid with factored beliefs, sensing models, and mission orchestration.

pub mod dtbf;
pub mod gridworld;
pub mod model;
pub mod planner;

pub use dtbf::{BarrierSpec, KappaFn, TraceReport};
pub use model::{Belief, JointAction, JointObservation, ModelError, MpomdpModel};
pub use planner::{MissionOutcome, NominalPolicy, PlanDecision, PlanError};

//! Optimistic online convex optimization with adversarial constraints.
//!
//! The crate has three layers:
//!
//! - **Learners.** [`omd`] implements optimistic online mirror descent with
//!   constant and adaptive step sizes, [`experts`] the simplex variant with
//!   uniform mixing, and [`coco`] wraps either learner in a virtual-queue
//!   meta-algorithm that also controls cumulative constraint violation.
//! - **Instrumentation.** Every learner can retain per-round state so that the
//!   per-step inequalities behind its regret guarantee are checkable after the
//!   fact ([`omd::OmdState::step_slack`], [`coco::CocoState::decomposition_slack`],
//!   [`geometry::three_point_slack`], [`experts::mixing_divergence_slacks`]).
//! - **Harness.** [`environments`] generates seeded adversarial loss/constraint
//!   sequences with declared bounds, [`oracle`] solves for the offline
//!   comparator, and [`harness`] runs full experiments, serializes traces, and
//!   re-evaluates every closed-form bound against the measured run.
//!
//! Start with the runnable examples (`cargo run --example hedged_experts`,
//! `constrained_queue`, ...) or the `optoco` binary (`run`, `sweep`, `verify`).

pub mod coco;
pub mod environments;
pub mod experts;
pub mod function;
pub mod geometry;
pub mod harness;
pub mod omd;
pub mod oracle;
pub mod rng;

pub(crate) mod vecops;

pub use function::{FirstOrderOracle, QuadraticForm};
pub use geometry::{BregmanGeometry, Domain, Norm, NormPair};

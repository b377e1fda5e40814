//! Simulation and stability analysis for a single-source, single-link
//! congestion-control model with feedback delays.
//!
//! The source rate obeys
//!
//! ```text
//! x'(t) = kappa * ( x(t)^-a - h * x(t - tau)^(b+1) * c(t - T)^-b ),   c = g(x)
//! ```
//!
//! [`dde::integrate`] solves it with a fixed-step RK4 scheme over a delayed
//! history, [`analysis`] provides the equilibrium, the delay-independent
//! stability margin, a Lyapunov–Krasovskii monitor and a behaviour
//! classifier, and [`scenario`] ties these together behind a TOML file.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dde;
pub mod error;
pub mod model;
pub mod scenario;

pub use analysis::{
    check_theorem2, classify, solve_equilibrium, ClassKind, Classification, StabilityReport,
    Tolerances, Verdict,
};
pub use dde::{integrate, HistoryBuffer, Trajectory, TrajectorySample};
pub use error::{Error, Result};
pub use model::{CapacityLaw, Equilibrium, ModelParams};
pub use scenario::{RunOutcome, ScenarioConfig};

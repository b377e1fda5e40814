//! Equilibrium, standing-assumption checks, the delay-independent stability
//! margin, the Lyapunov–Krasovskii monitor and trajectory classification.

pub mod assumptions;
pub mod classify;
pub mod equilibrium;
pub mod lyapunov;
pub mod stability;

pub use assumptions::{validate_assumptions, AssumptionId, Severity, Violation};
pub use classify::{classify, ClassKind, Classification, Tolerances};
pub use equilibrium::{solve_equilibrium, solve_on};
pub use lyapunov::{lyapunov_series, lyapunov_value, LyapunovSample};
pub use stability::{
    check_theorem2, margin_limit, theorem2_margin, MarginPoint, StabilityReport, Verdict,
};

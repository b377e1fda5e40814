//! Fixtures shared by the benchmarks.

use delaylab_core::analysis::solve_equilibrium;
use delaylab_core::{integrate, CapacityLaw, Equilibrium, HistoryBuffer, ModelParams, Trajectory};

pub const STEP: f64 = 0.01;

/// The b = 0.2 base case on the `5 - x` capacity law.
pub fn base_case() -> (ModelParams, CapacityLaw) {
    (
        ModelParams::new(1.0, 1.5, 0.2, 3.0, 2.0),
        CapacityLaw::affine(5.0, 1.0),
    )
}

pub fn base_equilibrium() -> Equilibrium {
    let (p, law) = base_case();
    solve_equilibrium(&p, &law).expect("base case has an equilibrium")
}

pub fn base_trajectory(t_end: f64) -> Trajectory {
    let (p, law) = base_case();
    let hist = HistoryBuffer::constant(STEP, p.max_delay(), 1.0).expect("valid history");
    integrate(&p, &law, hist, t_end, STEP).expect("base case integrates")
}

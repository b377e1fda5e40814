use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dde::Trajectory;
use crate::error::{Error, Result};
use crate::model::Equilibrium;

/// Amplitude ratio below which the tail counts as decaying.
pub const DECAY_RATIO: f64 = 0.9;

/// Relative distance to a rate bound that still counts as sitting on it.
const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_conv: f64,
    pub tol_osc: f64,
    pub tail_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_conv: 1e-2,
            tol_osc: 0.1,
            tail_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClassKind {
    Converged,
    Oscillating,
    Saturated,
    Undetermined,
}

impl ClassKind {
    /// Process exit status used by the `run` command.
    pub fn exit_code(self) -> i32 {
        match self {
            ClassKind::Converged => 0,
            ClassKind::Oscillating => 10,
            ClassKind::Saturated => 11,
            ClassKind::Undetermined => 12,
        }
    }
}

impl fmt::Display for ClassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ClassKind::Converged => "Converged",
            ClassKind::Oscillating => "Oscillating",
            ClassKind::Saturated => "Saturated",
            ClassKind::Undetermined => "Undetermined",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub kind: ClassKind,
    pub final_error: f64,
    pub tail_peak_to_peak: f64,
    pub mid_peak_to_peak: f64,
    pub settling_time: Option<f64>,
}

fn peak_to_peak<'a>(xs: impl Iterator<Item = &'a f64>) -> f64 {
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

/// Labels the long-run behaviour of `traj` relative to `eq`.
///
/// The tail is the last `tail_fraction` of the horizon; the mid-run window
/// has the same length and is centred on the middle of the horizon.
pub fn classify(traj: &Trajectory, eq: &Equilibrium, tol: &Tolerances) -> Result<Classification> {
    let horizon = traj.t_end - traj.t_start;
    let required = 10.0 * traj.params.round_trip_delay;
    if horizon < required {
        return Err(Error::HorizonTooShort { horizon, required });
    }
    if !(tol.tail_fraction > 0.0 && tol.tail_fraction <= 0.5) {
        return Err(Error::invalid(
            "tail_fraction",
            format!("must be in (0, 0.5], got {}", tol.tail_fraction),
        ));
    }

    let window = tol.tail_fraction * horizon;
    let tail_start = traj.t_end - window;
    let mid = traj.t_start + 0.5 * horizon;
    let (mid_lo, mid_hi) = (mid - 0.5 * window, mid + 0.5 * window);

    let xs: Vec<f64> = traj.samples.iter().map(|s| s.x).collect();
    let ts: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    let in_window = |lo: f64, hi: f64| {
        xs.iter()
            .zip(&ts)
            .filter(move |(_, &t)| t >= lo && t <= hi)
            .map(|(x, _)| x)
    };
    let tail_peak_to_peak = peak_to_peak(in_window(tail_start, traj.t_end));
    let mid_peak_to_peak = peak_to_peak(in_window(mid_lo, mid_hi));
    let final_error = (traj.last().x - eq.x_star).abs();

    let settling_time = xs
        .iter()
        .rposition(|x| (x - eq.x_star).abs() >= tol.tol_conv)
        .map_or(Some(traj.t_start), |k| ts.get(k + 1).copied());

    let p = &traj.params;
    let at_bound = |x: f64| {
        (x - p.rate_min).abs() <= BOUND_TOL * p.rate_min
            || (x - p.rate_max).abs() <= BOUND_TOL * p.rate_max
    };
    let saturated = in_window(tail_start, traj.t_end).all(|&x| at_bound(x));

    let kind = if final_error < tol.tol_conv && tail_peak_to_peak < tol.tol_conv {
        ClassKind::Converged
    } else if tail_peak_to_peak > tol.tol_osc && tail_peak_to_peak >= DECAY_RATIO * mid_peak_to_peak
    {
        ClassKind::Oscillating
    } else if saturated {
        ClassKind::Saturated
    } else {
        ClassKind::Undetermined
    };
    Ok(Classification {
        kind,
        final_error,
        tail_peak_to_peak,
        mid_peak_to_peak,
        settling_time,
    })
}

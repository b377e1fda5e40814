//! Lyapunov–Krasovskii functional along a computed trajectory.
//!
//! ```text
//! V(t) = |x(t) - x*|
//!      + kappa sgn(x(t) - x*) * integral_{-1}^{0}
//!            h (x(t + s tau)^(b+1) c(t + s T)^-b - x*^(b+1) c*^-b) ds
//! ```
//!
//! With the integration variable on `[-1, 0]`, the lower end samples exactly
//! `x(t - tau)` and `c(t - T)`. `V` is a diagnostic: it jumps whenever `x`
//! crosses `x*`.

use serde::Serialize;

use crate::dde::Trajectory;
use crate::error::{Error, Result};
use crate::model::{self, Equilibrium};

pub const DEFAULT_NODES: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovSample {
    pub t: f64,
    pub v: f64,
}

/// `V(t)` by composite trapezoid quadrature on `nodes` equally spaced nodes.
pub fn lyapunov_value(traj: &Trajectory, t: f64, eq: &Equilibrium, nodes: usize) -> Result<f64> {
    let p = &traj.params;
    let needed = t - p.max_delay();
    let slack = 1e-9 * traj.step;
    if needed < traj.t_start - slack {
        return Err(Error::InsufficientHistory {
            t,
            needed,
            start: traj.t_start,
        });
    }
    if t > traj.t_end + slack {
        return Err(Error::OutOfRange {
            t,
            lo: traj.t_start,
            hi: traj.t_end,
        });
    }
    if nodes < 2 {
        return Err(Error::GridTooCoarse {
            grid_n: nodes,
            min: 2,
        });
    }
    let b = p.price_exponent;
    let baseline = eq.x_star.powf(b + 1.0) * eq.c_star.powf(-b);
    let clamp_t = |s: f64| s.clamp(traj.t_start, traj.t_end);
    let integrand = |theta: f64| -> Result<f64> {
        let x = traj.x_at(clamp_t(t + theta * p.round_trip_delay))?;
        let c = model::capacity(&traj.law, traj.x_at(clamp_t(t + theta * p.capacity_delay))?)?;
        Ok(p.price_gain * (x.powf(b + 1.0) * c.powf(-b) - baseline))
    };

    let width = 1.0 / (nodes - 1) as f64;
    let mut integral = 0.0;
    for j in 0..nodes {
        let theta = -1.0 + j as f64 * width;
        let weight = if j == 0 || j + 1 == nodes { 0.5 } else { 1.0 };
        integral += weight * integrand(theta)?;
    }
    integral *= width;

    let deviation = traj.x_at(clamp_t(t))? - eq.x_star;
    let sign = if deviation > 0.0 {
        1.0
    } else if deviation < 0.0 {
        -1.0
    } else {
        0.0
    };
    Ok(deviation.abs() + p.gain * sign * integral)
}

/// Samples `V` at every multiple of `every` from the first time the
/// functional is defined up to the end of the run.
pub fn lyapunov_series(
    traj: &Trajectory,
    eq: &Equilibrium,
    every: f64,
    nodes: usize,
) -> Result<Vec<LyapunovSample>> {
    let first = ((traj.t_start + traj.params.max_delay()) / every - 1e-9).ceil() as i64;
    let last = (traj.t_end / every + 1e-9).floor() as i64;
    (first..=last)
        .map(|k| {
            let t = k as f64 * every;
            lyapunov_value(traj, t, eq, nodes).map(|v| LyapunovSample { t, v })
        })
        .collect()
}

//! Delay-independent stability margin.
//!
//! With `c = g(x)` the sufficient condition reads, for every `x` in range,
//!
//! ```text
//! (x*^-a - x^-a) / (x - x*)  >  h (x^(b+1) g(x)^-b - x*^(b+1) c*^-b) / (x - x*)
//! ```
//!
//! The margin is the left side minus the right side. Both quotients are 0/0
//! at `x*`; inside a small band the derivative limit is used instead.

use std::fmt;

use serde::Serialize;

use crate::analysis::assumptions::{validate_assumptions, Severity, Violation};
use crate::analysis::equilibrium::solve_equilibrium;
use crate::error::{Error, Result};
use crate::model::{self, CapacityLaw, Equilibrium, ModelParams};

/// Half-width of the band around `x*` where the limit value is used,
/// relative to `x*`.
pub const EPS_BAND: f64 = 1e-6;

/// Minimum grid density accepted by [`check_theorem2`].
pub const MIN_GRID: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    CertifiedStable,
    NotCertified,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::CertifiedStable => f.write_str("CertifiedStable"),
            Verdict::NotCertified => f.write_str("NotCertified"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginPoint {
    pub x: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub equilibrium: Equilibrium,
    pub assumption_violations: Vec<Violation>,
    pub range: (f64, f64),
    pub grid_n: usize,
    /// Grid values plus the limit point at `x*`, sorted by `x`.
    pub margin_profile: Vec<MarginPoint>,
    pub min_margin: f64,
    /// Where the minimum margin occurs.
    pub argmin: f64,
    pub verdict: Verdict,
}

impl StabilityReport {
    pub fn has_hard_violation(&self) -> bool {
        self.assumption_violations
            .iter()
            .any(|v| v.severity == Severity::Hard)
    }
}

/// Limit of the margin as `x -> x*`.
pub fn margin_limit(p: &ModelParams, law: &CapacityLaw, eq: &Equilibrium) -> f64 {
    let (a, b, h) = (p.utility_exponent, p.price_exponent, p.price_gain);
    let (xs, cs) = (eq.x_star, eq.c_star);
    let lhs = a * xs.powf(-(a + 1.0));
    let rhs = (b + 1.0) * xs.powf(b) * cs.powf(-b)
        - b * xs.powf(b + 1.0) * cs.powf(-b - 1.0) * law.derivative(xs);
    lhs - h * rhs
}

/// Left side minus right side of the sufficient condition at `x`.
pub fn theorem2_margin(
    x: f64,
    p: &ModelParams,
    law: &CapacityLaw,
    eq: &Equilibrium,
) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain {
            what: "margin rate",
            value: x,
        });
    }
    let c = model::capacity(law, x)?;
    let (xs, cs) = (eq.x_star, eq.c_star);
    let dx = x - xs;
    if dx.abs() < EPS_BAND * xs {
        return Ok(margin_limit(p, law, eq));
    }
    let (a, b, h) = (p.utility_exponent, p.price_exponent, p.price_gain);
    let lhs = (model::pow_pos("margin", xs, -a)? - model::pow_pos("margin", x, -a)?) / dx;
    let load = |x: f64, c: f64| -> Result<f64> {
        Ok(model::pow_pos("margin", x, b + 1.0)? * model::pow_pos("margin", c, -b)?)
    };
    let rhs = h * (load(x, c)? - load(xs, cs)?) / dx;
    Ok(lhs - rhs)
}

/// Evaluates the margin on a uniform `grid_n`-point grid over `range` plus
/// the limit point at `x*`, alongside the assumption checks.
///
/// The verdict is `CertifiedStable` iff every margin is positive and there
/// is no hard assumption violation.
pub fn check_theorem2(
    p: &ModelParams,
    law: &CapacityLaw,
    range: (f64, f64),
    grid_n: usize,
) -> Result<StabilityReport> {
    if grid_n < MIN_GRID {
        return Err(Error::GridTooCoarse {
            grid_n,
            min: MIN_GRID,
        });
    }
    let (lo, hi) = range;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidRange {
            lo,
            hi,
            reason: "need 0 < x_lo < x_hi".into(),
        });
    }
    let equilibrium = solve_equilibrium(p, law)?;
    let assumption_violations = validate_assumptions(p, law, range, grid_n)?;

    let step = (hi - lo) / (grid_n - 1) as f64;
    let mut xs: Vec<f64> = (0..grid_n)
        .map(|k| {
            if k + 1 == grid_n {
                hi
            } else {
                lo + k as f64 * step
            }
        })
        .collect();
    xs.push(equilibrium.x_star);
    xs.sort_by(f64::total_cmp);

    let margin_profile = xs
        .into_iter()
        .map(|x| theorem2_margin(x, p, law, &equilibrium).map(|margin| MarginPoint { x, margin }))
        .collect::<Result<Vec<_>>>()?;
    let worst = margin_profile
        .iter()
        .copied()
        .min_by(|l, r| l.margin.total_cmp(&r.margin))
        .expect("grid is non-empty");

    let hard = assumption_violations
        .iter()
        .any(|v| v.severity == Severity::Hard);
    let verdict = if worst.margin > 0.0 && !hard {
        Verdict::CertifiedStable
    } else {
        Verdict::NotCertified
    };
    Ok(StabilityReport {
        equilibrium,
        assumption_violations,
        range,
        grid_n,
        margin_profile,
        min_margin: worst.margin,
        argmin: worst.x,
        verdict,
    })
}

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CapacityLaw, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AssumptionId {
    /// Positive constants and `tau >= T`.
    A1,
    /// `g` positive, decreasing, `g > 1` and `g' < -1`.
    A3,
}

impl fmt::Display for AssumptionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssumptionId::A1 => f.write_str("A1"),
            AssumptionId::A3 => f.write_str("A3"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Severity {
    Warning,
    Hard,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Warning => f.write_str("warning"),
            Severity::Hard => f.write_str("hard"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub assumption: AssumptionId,
    pub description: String,
    pub severity: Severity,
}

impl Violation {
    fn hard(assumption: AssumptionId, description: String) -> Self {
        Self {
            assumption,
            description,
            severity: Severity::Hard,
        }
    }

    fn warning(assumption: AssumptionId, description: String) -> Self {
        Self {
            assumption,
            description,
            severity: Severity::Warning,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {}",
            self.assumption, self.severity, self.description
        )
    }
}

/// Reports every way the parameters and capacity law miss the standing
/// assumptions on `[range.0, range.1]`.
///
/// Findings are returned, not raised. The slope condition `g' < -1` is a
/// warning (the AVQ law `5 - x` sits exactly on its boundary); `g <= 1` and
/// any A1 failure are hard.
pub fn validate_assumptions(
    p: &ModelParams,
    law: &CapacityLaw,
    range: (f64, f64),
    grid_n: usize,
) -> Result<Vec<Violation>> {
    let (lo, hi) = range;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidRange {
            lo,
            hi,
            reason: "need x_lo < x_hi".into(),
        });
    }
    if grid_n < 2 {
        return Err(Error::GridTooCoarse { grid_n, min: 2 });
    }

    let mut found = Vec::new();
    let constants = [
        ("kappa", p.gain),
        ("a", p.utility_exponent),
        ("b", p.price_exponent),
        ("tau", p.round_trip_delay),
        ("T_delay", p.capacity_delay),
    ];
    for (name, value) in constants {
        if !(value > 0.0) {
            found.push(Violation::hard(
                AssumptionId::A1,
                format!("{name} = {value} is not positive"),
            ));
        }
    }
    if p.round_trip_delay < p.capacity_delay {
        found.push(Violation::hard(
            AssumptionId::A1,
            format!(
                "tau >= T fails: tau = {} < T = {}",
                p.round_trip_delay, p.capacity_delay
            ),
        ));
    }

    match *law {
        CapacityLaw::Affine { slope, .. } => {
            if -slope >= -1.0 {
                found.push(Violation::warning(
                    AssumptionId::A3,
                    format!("g'(x) = {} is not < -1", -slope),
                ));
            }
        }
        CapacityLaw::Constant { .. } => {
            found.push(Violation::warning(
                AssumptionId::A3,
                "constant capacity is not decreasing (g' = 0 is not < -1)".into(),
            ));
        }
    }

    let step = (hi - lo) / (grid_n - 1) as f64;
    let failing: Vec<f64> = (0..grid_n)
        .map(|k| {
            if k + 1 == grid_n {
                hi
            } else {
                lo + k as f64 * step
            }
        })
        .filter(|&x| !(law.eval(x) > 1.0))
        .collect();
    if let Some(&first) = failing.first() {
        found.push(Violation::hard(
            AssumptionId::A3,
            format!(
                "g(x) > 1 fails at {} of {grid_n} grid points (first x = {first}, g = {})",
                failing.len(),
                law.eval(first)
            ),
        ));
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn avq_law_warns_on_slope_only() {
        let p = ModelParams::new(1.0, 1.5, 0.8, 3.0, 2.0);
        let found =
            validate_assumptions(&p, &CapacityLaw::affine(5.0, 1.0), (0.5, 3.0), 64).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].assumption, AssumptionId::A3);
        assert_eq!(found[0].severity, Severity::Warning);
    }

    #[test]
    fn delay_order_is_hard() {
        let p = ModelParams::new(1.0, 1.5, 0.8, 2.0, 3.0);
        let found =
            validate_assumptions(&p, &CapacityLaw::affine(5.0, 2.0), (0.5, 1.9), 64).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].assumption, AssumptionId::A1);
        assert_eq!(found[0].severity, Severity::Hard);
    }

    #[test]
    fn steep_law_is_clean() {
        // g(x) = 5 - 2x > 1 iff x < 2; brute-force the same grid here
        let law = CapacityLaw::affine(5.0, 2.0);
        let grid: Vec<f64> = (0..=1000).map(|k| 0.5 + 1.4 * k as f64 / 1000.0).collect();
        assert!(grid.iter().all(|&x| 5.0 - 2.0 * x > 1.0));
        let p = ModelParams::new(1.0, 1.5, 0.8, 3.0, 2.0);
        assert!(validate_assumptions(&p, &law, (0.5, 1.9), 1001)
            .unwrap()
            .is_empty());
        // extending past x = 2 trips the hard check
        let found = validate_assumptions(&p, &law, (0.5, 2.5), 1001).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].severity, Severity::Hard);
    }

    #[test]
    fn constant_law_always_warns() {
        let p = ModelParams::new(1.0, 1.5, 0.8, 3.0, 2.0);
        let found = validate_assumptions(&p, &CapacityLaw::constant(3.0), (0.5, 3.0), 16).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].severity, Severity::Warning);
        let found = validate_assumptions(&p, &CapacityLaw::constant(1.0), (0.5, 3.0), 16).unwrap();
        assert!(found.iter().any(|v| v.severity == Severity::Hard));
    }

    #[test]
    fn bad_inputs() {
        let p = ModelParams::new(1.0, 1.5, 0.8, 3.0, 2.0);
        let law = CapacityLaw::affine(5.0, 1.0);
        assert!(validate_assumptions(&p, &law, (3.0, 0.5), 16).is_err());
        assert!(validate_assumptions(&p, &law, (0.5, 3.0), 1).is_err());
    }
}

//! The single-source, single-link primal rate controller.
//!
//! The source rate `x` evolves as
//!
//! ```text
//! dx/dt = kappa * (x(t)^-a - h * x(t - tau)^(b+1) * c(t - T)^-b),   c = g(x)
//! ```
//!
//! which is `kappa * (x U'(x) - x(t - tau) p(x(t - tau), c(t - T)))` for the
//! utility `U(x) = -1 / (a x^a)` and price `p(x, c) = h (x / c)^b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar constants of the delayed rate controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Controller gain `kappa`.
    pub gain: f64,
    /// Utility exponent `a`.
    pub utility_exponent: f64,
    /// Price exponent `b`.
    pub price_exponent: f64,
    /// Price multiplier `h`.
    pub price_gain: f64,
    /// Round-trip delay `tau` (forward plus reverse), seconds.
    pub round_trip_delay: f64,
    /// Delay `T` of the capacity information (reverse path), seconds.
    pub capacity_delay: f64,
    pub rate_min: f64,
    pub rate_max: f64,
}

impl ModelParams {
    pub const DEFAULT_RATE_MIN: f64 = 1e-3;
    pub const DEFAULT_RATE_MAX: f64 = 1e3;

    /// Parameters with unit price gain and the default rate bounds.
    pub fn new(gain: f64, a: f64, b: f64, tau: f64, t_delay: f64) -> Self {
        Self {
            gain,
            utility_exponent: a,
            price_exponent: b,
            price_gain: 1.0,
            round_trip_delay: tau,
            capacity_delay: t_delay,
            rate_min: Self::DEFAULT_RATE_MIN,
            rate_max: Self::DEFAULT_RATE_MAX,
        }
    }

    /// Longest delay; the history must cover at least this much past time.
    pub fn max_delay(&self) -> f64 {
        self.round_trip_delay.max(self.capacity_delay)
    }

    /// Checks positivity of every constant and the rate bounds. The delay
    /// ordering `tau >= T` is checked separately by [`Self::validate`].
    pub fn validate_positive(&self) -> Result<()> {
        let positive = [
            ("kappa", self.gain),
            ("a", self.utility_exponent),
            ("b", self.price_exponent),
            ("h_gain", self.price_gain),
            ("tau", self.round_trip_delay),
            ("T_delay", self.capacity_delay),
            ("x_min", self.rate_min),
            ("x_max", self.rate_max),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and > 0, got {value}"),
                ));
            }
        }
        if self.rate_min >= self.rate_max {
            return Err(Error::invalid(
                "x_min",
                format!(
                    "x_min ({}) must be < x_max ({})",
                    self.rate_min, self.rate_max
                ),
            ));
        }
        Ok(())
    }

    /// Full validation including assumption A1's `tau >= T`.
    pub fn validate(&self) -> Result<()> {
        self.validate_positive()?;
        if self.round_trip_delay < self.capacity_delay {
            return Err(Error::invalid(
                "tau",
                format!(
                    "tau ({}) must be >= T_delay ({}) (assumption A1)",
                    self.round_trip_delay, self.capacity_delay
                ),
            ));
        }
        Ok(())
    }
}

/// Link capacity as a function of the current source rate, `c = g(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CapacityLaw {
    /// `g(x) = intercept - slope * x`, an adaptive virtual queue.
    Affine {
        intercept: f64,
        slope: f64,
    },
    Constant {
        level: f64,
    },
}

impl CapacityLaw {
    pub fn affine(intercept: f64, slope: f64) -> Self {
        CapacityLaw::Affine { intercept, slope }
    }

    pub fn constant(level: f64) -> Self {
        CapacityLaw::Constant { level }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CapacityLaw::Affine { intercept, slope } => {
                if !(intercept.is_finite() && intercept > 0.0) {
                    return Err(Error::invalid(
                        "intercept",
                        format!("must be finite and > 0, got {intercept}"),
                    ));
                }
                if !(slope.is_finite() && slope > 0.0) {
                    return Err(Error::invalid(
                        "slope",
                        format!("affine law must be strictly decreasing (slope > 0), got {slope}"),
                    ));
                }
            }
            CapacityLaw::Constant { level } => {
                if !(level.is_finite() && level > 0.0) {
                    return Err(Error::invalid(
                        "level",
                        format!("must be finite and > 0, got {level}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `g(x)` without the positivity check.
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            CapacityLaw::Affine { intercept, slope } => intercept - slope * x,
            CapacityLaw::Constant { level } => level,
        }
    }

    /// `g'(x)`.
    pub fn derivative(&self, _x: f64) -> f64 {
        match *self {
            CapacityLaw::Affine { slope, .. } => -slope,
            CapacityLaw::Constant { .. } => 0.0,
        }
    }
}

/// Fixed point `(x*, c*)` of the controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub x_star: f64,
    pub c_star: f64,
    /// `|g(x*) - h^(1/b) x*^((a+b+1)/b)| / c*`.
    pub residual: f64,
}

/// `base^exponent` for a strictly positive base.
pub(crate) fn pow_pos(what: &'static str, base: f64, exponent: f64) -> Result<f64> {
    if !(base > 0.0) || !base.is_finite() {
        return Err(Error::Domain { what, value: base });
    }
    Ok((exponent * base.ln()).exp())
}

/// Marginal utility `U'(x) = x^-(a+1)` of `U(x) = -1 / (a x^a)`.
pub fn utility_derivative(x: f64, a: f64) -> Result<f64> {
    pow_pos("utility derivative", x, -(a + 1.0))
}

/// Link price `h (x / c)^b`.
pub fn price(x: f64, c: f64, b: f64, h_gain: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain {
            what: "price rate",
            value: x,
        });
    }
    if !(c > 0.0) {
        return Err(Error::Domain {
            what: "price capacity",
            value: c,
        });
    }
    Ok(h_gain * pow_pos("price", x / c, b)?)
}

/// Evaluates `g(x)`, failing when the link has no capacity left.
pub fn capacity(law: &CapacityLaw, x: f64) -> Result<f64> {
    let c = law.eval(x);
    if !(c > 0.0) {
        return Err(Error::CapacityExhausted { x, capacity: c });
    }
    Ok(c)
}

/// Right-hand side of the delayed rate equation, before the bound projection.
pub fn rhs(x_now: f64, x_delayed: f64, c_delayed: f64, p: &ModelParams) -> Result<f64> {
    let gain_term = pow_pos("rhs current rate", x_now, -p.utility_exponent)?;
    let b = p.price_exponent;
    let delayed = pow_pos("rhs delayed rate", x_delayed, b + 1.0)?;
    let cap = pow_pos("rhs delayed capacity", c_delayed, -b)?;
    Ok(p.gain * (gain_term - p.price_gain * delayed * cap))
}

/// Projects `dxdt` so the rate cannot leave `[x_min, x_max]`.
pub fn clamp(x: f64, dxdt: f64, p: &ModelParams) -> f64 {
    if x >= p.rate_max {
        dxdt.min(0.0)
    } else if x <= p.rate_min {
        dxdt.max(0.0)
    } else {
        dxdt
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn base_params(b: f64) -> ModelParams {
        ModelParams::new(1.0, 1.5, b, 3.0, 2.0)
    }

    fn rel_eq(lhs: f64, rhs: f64, tol: f64) -> bool {
        (lhs - rhs).abs() <= tol * lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn utility_derivative_values() {
        assert_eq!(utility_derivative(1.0, 1.5).unwrap(), 1.0);
        assert!((utility_derivative(4.0, 1.0).unwrap() - 0.0625).abs() < 1e-15);
        assert!(matches!(
            utility_derivative(0.0, 1.5),
            Err(Error::Domain { .. })
        ));
        assert!(utility_derivative(-1.0, 1.5).is_err());
    }

    #[test]
    fn price_values() {
        assert!((price(2.5, 2.5, 0.8, 1.0).unwrap() - 1.0).abs() < 1e-15);
        // 4^-0.8 to 40 digits
        let expected = 0.329_876_977_693_223_564_8;
        assert!((price(1.0, 4.0, 0.8, 1.0).unwrap() - expected).abs() < 1e-15);
        assert!((price(3.0, 3.0, 0.2, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(price(0.0, 1.0, 0.8, 1.0).is_err());
        assert!(price(1.0, -1.0, 0.8, 1.0).is_err());
    }

    #[test]
    fn capacity_values() {
        let avq = CapacityLaw::affine(5.0, 1.0);
        assert_eq!(capacity(&avq, 1.0).unwrap(), 4.0);
        assert_eq!(capacity(&CapacityLaw::constant(3.0), 17.0).unwrap(), 3.0);
        match capacity(&avq, 5.0) {
            Err(Error::CapacityExhausted { x, .. }) => assert_eq!(x, 5.0),
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn rhs_values() {
        let p = base_params(0.8);
        let expected = 0.670_123_022_306_776_435_2;
        let got = rhs(1.0, 1.0, 4.0, &p).unwrap();
        assert!((got - expected).abs() < 1e-15);

        let doubled = ModelParams { gain: 2.0, ..p };
        assert!((rhs(1.0, 1.0, 4.0, &doubled).unwrap() - 2.0 * got).abs() < 1e-15);

        // b = 0.8 fixed point from a 40-digit root solve
        let x_star = 1.367_154_040_968_643_1;
        let c_star = 5.0 - x_star;
        assert!(rhs(x_star, x_star, c_star, &p).unwrap().abs() < 1e-14);
        assert!(rhs(0.0, 1.0, 1.0, &p).is_err());
        assert!(rhs(1.0, 1.0, 0.0, &p).is_err());
    }

    #[test]
    fn clamp_projection() {
        let p = base_params(0.8);
        assert_eq!(clamp(p.rate_max, 3.0, &p), 0.0);
        assert_eq!(clamp(p.rate_max, -2.0, &p), -2.0);
        assert_eq!(clamp(p.rate_min, -1.0, &p), 0.0);
        assert_eq!(clamp(p.rate_min, 1.0, &p), 1.0);
        assert_eq!(clamp(1.0, -1.0, &p), -1.0);
    }

    #[test]
    fn params_validation() {
        assert!(base_params(0.8).validate().is_ok());
        let swapped = ModelParams::new(1.0, 1.5, 0.8, 2.0, 3.0);
        assert!(swapped.validate_positive().is_ok());
        let err = swapped.validate().unwrap_err().to_string();
        assert!(err.contains("A1"), "{err}");
        let bad = ModelParams {
            rate_min: 2.0,
            rate_max: 1.0,
            ..base_params(0.8)
        };
        assert!(bad.validate().is_err());
        assert!(ModelParams::new(0.0, 1.5, 0.8, 3.0, 2.0)
            .validate()
            .is_err());
        assert!(CapacityLaw::affine(5.0, 0.0).validate().is_err());
        assert!(CapacityLaw::constant(-1.0).validate().is_err());
    }

    proptest! {
        #[test]
        fn primal_form_agrees_with_rhs(
            x in 0.01f64..50.0,
            xd in 0.01f64..50.0,
            cd in 0.01f64..50.0,
            a in 0.1f64..4.0,
            b in 0.05f64..3.0,
            kappa in 0.1f64..5.0,
        ) {
            let p = ModelParams::new(kappa, a, b, 3.0, 2.0);
            let primal = kappa
                * (x * utility_derivative(x, a).unwrap() - xd * price(xd, cd, b, 1.0).unwrap());
            let direct = rhs(x, xd, cd, &p).unwrap();
            let scale = (kappa * x.powf(-a)).max(kappa * xd.powf(b + 1.0) * cd.powf(-b));
            prop_assert!((primal - direct).abs() <= 1e-12 * scale);
        }

        #[test]
        fn undelayed_sign_structure(b in 0.1f64..1.5, frac in 0.02f64..0.98) {
            // AVQ law; x* from the constant-capacity identity c* = x*^e
            let p = base_params(b);
            let law = CapacityLaw::affine(5.0, 1.0);
            let e = (p.utility_exponent + b + 1.0) / b;
            let (mut lo, mut hi) = (1e-3, 4.999);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if law.eval(mid) - mid.powf(e) > 0.0 { lo = mid } else { hi = mid }
            }
            let x_star = 0.5 * (lo + hi);
            let x = 0.2 + frac * 4.6;
            prop_assume!((x - x_star).abs() > 1e-6);
            let d = rhs(x, x, law.eval(x), &p).unwrap();
            if x < x_star { prop_assert!(d > 0.0) } else { prop_assert!(d < 0.0) }
        }

        #[test]
        fn clamp_is_idempotent(x in 1e-3f64..1e3, d in -100.0f64..100.0) {
            let p = base_params(0.8);
            let once = clamp(x, d, &p);
            prop_assert_eq!(clamp(x, once, &p), once);
        }

        #[test]
        fn price_and_utility_monotone(x in 0.01f64..20.0, dx in 1e-3f64..5.0, c in 0.1f64..20.0, b in 0.05f64..3.0, a in 0.1f64..4.0) {
            prop_assert!(price(x + dx, c, b, 1.0).unwrap() > price(x, c, b, 1.0).unwrap());
            prop_assert!(price(x, c + dx, b, 1.0).unwrap() < price(x, c, b, 1.0).unwrap());
            prop_assert!(utility_derivative(x + dx, a).unwrap() < utility_derivative(x, a).unwrap());
            prop_assert!(rel_eq(price(x, x, b, 1.0).unwrap(), 1.0, 1e-14));
        }
    }
}

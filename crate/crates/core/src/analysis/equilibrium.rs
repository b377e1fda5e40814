use crate::error::{Error, Result};
use crate::model::{CapacityLaw, Equilibrium, ModelParams};

/// `F(x) = g(x) - h^(1/b) x^((a+b+1)/b)`; strictly decreasing for any
/// non-increasing `g`, zero exactly at the fixed point.
pub fn balance(p: &ModelParams, law: &CapacityLaw, x: f64) -> f64 {
    let b = p.price_exponent;
    let e = (p.utility_exponent + b + 1.0) / b;
    law.eval(x) - p.price_gain.powf(1.0 / b) * x.powf(e)
}

/// Bisects `F` on `[x_min, x_max]` down to adjacent floating-point values.
pub fn solve_equilibrium(p: &ModelParams, law: &CapacityLaw) -> Result<Equilibrium> {
    p.validate_positive()?;
    law.validate()?;
    solve_on(p, law, p.rate_min, p.rate_max)
}

/// Same as [`solve_equilibrium`] on an explicit bracket.
pub fn solve_on(p: &ModelParams, law: &CapacityLaw, lo: f64, hi: f64) -> Result<Equilibrium> {
    let no_root = || Error::NoEquilibrium { lo, hi };
    let (mut a, mut b) = (lo, hi);
    let (f_lo, f_hi) = (balance(p, law, a), balance(p, law, b));
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(no_root());
    }
    for _ in 0..2000 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let f = balance(p, law, mid);
        if f == 0.0 {
            a = mid;
            b = mid;
            break;
        }
        if f > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let x_star = if balance(p, law, a).abs() <= balance(p, law, b).abs() {
        a
    } else {
        b
    };
    let c_star = law.eval(x_star);
    if !(c_star > 0.0) || x_star <= lo || x_star >= hi {
        return Err(no_root());
    }
    let residual = balance(p, law, x_star).abs() / c_star;
    Ok(Equilibrium {
        x_star,
        c_star,
        residual,
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::model::{price, utility_derivative};

    fn section_iv(b: f64) -> ModelParams {
        ModelParams::new(1.0, 1.5, b, 3.0, 2.0)
    }

    #[test]
    fn reported_equilibrium_is_the_low_exponent_case() {
        let eq = solve_equilibrium(&section_iv(0.2), &CapacityLaw::affine(5.0, 1.0)).unwrap();
        assert!((eq.x_star - 1.1059).abs() < 1e-4);
        assert!((eq.c_star - 3.8941).abs() < 1e-4);
        // 40-digit root of 5 - x = x^13.5
        assert!((eq.x_star - 1.105_944_895_225_789_1).abs() < 1e-14);
        assert!(eq.residual < 1e-10);
    }

    #[test]
    fn high_exponent_equilibrium() {
        let eq = solve_equilibrium(&section_iv(0.8), &CapacityLaw::affine(5.0, 1.0)).unwrap();
        // 40-digit root of 5 - x = x^4.125
        assert!((eq.x_star - 1.367_154_040_968_643_1).abs() < 1e-14);
        assert!((eq.c_star - 3.632_845_959_031_356_9).abs() < 1e-14);
        assert!(eq.residual < 1e-10);
    }

    #[test]
    fn unit_capacity_gives_unit_rate() {
        for (a, b) in [(1.5, 0.2), (0.3, 2.0), (4.0, 0.05)] {
            let p = ModelParams::new(1.0, a, b, 3.0, 2.0);
            let eq = solve_equilibrium(&p, &CapacityLaw::constant(1.0)).unwrap();
            assert!((eq.x_star - 1.0).abs() < 1e-12, "{a} {b}: {}", eq.x_star);
        }
    }

    #[test]
    fn first_order_optimality() {
        for b in [0.2, 0.5, 0.8, 1.3] {
            let p = section_iv(b);
            let eq = solve_equilibrium(&p, &CapacityLaw::affine(5.0, 1.0)).unwrap();
            let marginal = utility_derivative(eq.x_star, p.utility_exponent).unwrap();
            let charged = price(eq.x_star, eq.c_star, b, 1.0).unwrap();
            assert!((marginal - charged).abs() <= 1e-9 * marginal);
        }
        let p = ModelParams {
            price_gain: 0.5,
            ..section_iv(0.8)
        };
        let eq = solve_equilibrium(&p, &CapacityLaw::affine(5.0, 1.0)).unwrap();
        let marginal = utility_derivative(eq.x_star, p.utility_exponent).unwrap();
        let charged = price(eq.x_star, eq.c_star, 0.8, 0.5).unwrap();
        assert!((marginal - charged).abs() <= 1e-9 * marginal);
    }

    #[test]
    fn bracket_without_sign_change() {
        let p = ModelParams {
            rate_min: 2.0,
            rate_max: 3.0,
            ..section_iv(0.8)
        };
        assert!(matches!(
            solve_equilibrium(&p, &CapacityLaw::affine(5.0, 1.0)),
            Err(Error::NoEquilibrium { .. })
        ));
    }

    #[test]
    fn any_valid_bracket_gives_same_root() {
        let p = section_iv(0.8);
        let law = CapacityLaw::affine(5.0, 1.0);
        let reference = solve_equilibrium(&p, &law).unwrap().x_star;
        for (lo, hi) in [(0.5, 2.0), (1.3, 1.4), (1e-3, 4.99), (0.01, 100.0)] {
            let x = solve_on(&p, &law, lo, hi).unwrap().x_star;
            assert!((x - reference).abs() < 1e-10 * reference);
        }
    }
}

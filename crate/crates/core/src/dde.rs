//! Fixed-step RK4 for the scalar delayed rate equation.
//!
//! Past values live in a [`HistoryBuffer`] sampled on the integration grid.
//! Stage evaluations at half steps read delayed values through cubic Hermite
//! interpolation of the stored values and derivatives, so both delays must be
//! whole multiples of the step.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{self, CapacityLaw, ModelParams};

/// Relative tolerance for "delay is an integer multiple of the step".
pub const MULTIPLE_TOL: f64 = 1e-9;

/// Tolerance, in units of the step, for a query to count as a grid hit.
const GRID_HIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistorySample {
    pub x: f64,
    pub dxdt: f64,
}

/// Uniformly sampled past of `x`, growing as an integration run proceeds.
///
/// Sample `k` sits at time `(k - zero_index) * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryBuffer {
    step: f64,
    zero_index: usize,
    samples: Vec<HistorySample>,
    /// Right-hand derivative at `t = 0`, where the given history meets the
    /// solution. The stored sample keeps the history's own derivative.
    seam_dxdt: Option<f64>,
}

impl HistoryBuffer {
    /// Samples `init` on the grid `{-n*step, ..., -step, 0}` with
    /// `n = ceil(span / step)`. Pre-history derivatives are stored as 0.
    pub fn from_fn<F>(step: f64, span: f64, init: F) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::invalid("step", format!("must be > 0, got {step}")));
        }
        if !(span.is_finite() && span > 0.0) {
            return Err(Error::invalid("span", format!("must be > 0, got {span}")));
        }
        let ratio = span / step;
        let n = if (ratio - ratio.round()).abs() <= MULTIPLE_TOL * ratio {
            ratio.round() as usize
        } else {
            ratio.ceil() as usize
        };
        let mut samples = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let t = (k as f64 - n as f64) * step;
            let x = init(t);
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::NonPositiveHistory { t, value: x });
            }
            samples.push(HistorySample { x, dxdt: 0.0 });
        }
        Ok(Self {
            step,
            zero_index: n,
            samples,
            seam_dxdt: None,
        })
    }

    pub fn constant(step: f64, span: f64, value: f64) -> Result<Self> {
        Self::from_fn(step, span, |_| value)
    }

    /// Builds a buffer from explicit samples; the last one sits at `t = 0`.
    pub fn from_samples(step: f64, samples: Vec<HistorySample>) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::invalid("step", format!("must be > 0, got {step}")));
        }
        if samples.len() < 2 {
            return Err(Error::invalid("samples", "need at least two samples"));
        }
        let zero_index = samples.len() - 1;
        for (k, s) in samples.iter().enumerate() {
            if !(s.x > 0.0) || !s.x.is_finite() {
                let t = (k as f64 - zero_index as f64) * step;
                return Err(Error::NonPositiveHistory { t, value: s.x });
            }
        }
        Ok(Self {
            step,
            zero_index,
            samples,
            seam_dxdt: None,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Time of the oldest sample.
    pub fn origin(&self) -> f64 {
        self.time_of(0)
    }

    /// Time of the newest sample.
    pub fn end(&self) -> f64 {
        self.time_of(self.samples.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[HistorySample] {
        &self.samples
    }

    /// `(t, sample)` pairs in time order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, HistorySample)> + '_ {
        self.samples
            .iter()
            .enumerate()
            .map(|(k, s)| (self.time_of(k), *s))
    }

    fn time_of(&self, k: usize) -> f64 {
        (k as f64 - self.zero_index as f64) * self.step
    }

    /// Value and derivative at `t`: the stored sample on a grid hit, the
    /// cubic Hermite interpolant of the bracketing samples otherwise.
    pub fn lookup(&self, t: f64) -> Result<HistorySample> {
        let pos = t / self.step + self.zero_index as f64;
        let last = (self.samples.len() - 1) as f64;
        if !(pos >= -GRID_HIT_TOL && pos <= last + GRID_HIT_TOL) {
            return Err(Error::OutOfRange {
                t,
                lo: self.origin(),
                hi: self.end(),
            });
        }
        Ok(self.at_position(pos.clamp(0.0, last)))
    }

    /// Lookup by fractional sample index; the caller guarantees range.
    fn at_position(&self, pos: f64) -> HistorySample {
        let nearest = pos.round();
        if (pos - nearest).abs() <= GRID_HIT_TOL {
            return self.samples[nearest as usize];
        }
        let k = pos.floor() as usize;
        let s = pos - k as f64;
        let left = self.samples[k];
        let right = self.samples[k + 1];
        let d0 = match self.seam_dxdt {
            Some(d) if k == self.zero_index => d,
            _ => left.dxdt,
        };
        hermite(left.x, d0, right.x, right.dxdt, self.step, s)
    }
}

/// Cubic Hermite interpolant on one interval of width `h` at fraction `s`.
pub(crate) fn hermite(x0: f64, d0: f64, x1: f64, d1: f64, h: f64, s: f64) -> HistorySample {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let x = h00 * x0 + h10 * h * d0 + h01 * x1 + h11 * h * d1;
    // d/ds of the basis, divided by h for d/dt
    let dh00 = 6.0 * s2 - 6.0 * s;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = -6.0 * s2 + 6.0 * s;
    let dh11 = 3.0 * s2 - 2.0 * s;
    let dxdt = (dh00 * x0 + dh01 * x1) / h + dh10 * d0 + dh11 * d1;
    HistorySample { x, dxdt }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub c: f64,
    pub dxdt: f64,
}

/// A simulated solution on `[t_start, t_end]` at uniform spacing `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub step: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: Vec<TrajectorySample>,
    pub params: ModelParams,
    pub law: CapacityLaw,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory is never empty")
    }

    /// Smallest and largest `x` over the run.
    pub fn envelope(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.x), hi.max(s.x))
            })
    }

    /// `x(t)` by Hermite interpolation between grid samples.
    pub fn x_at(&self, t: f64) -> Result<f64> {
        let pos = (t - self.t_start) / self.step;
        let last = (self.samples.len() - 1) as f64;
        if !(pos >= -GRID_HIT_TOL && pos <= last + GRID_HIT_TOL) {
            return Err(Error::OutOfRange {
                t,
                lo: self.t_start,
                hi: self.t_end,
            });
        }
        let pos = pos.clamp(0.0, last);
        let nearest = pos.round();
        if (pos - nearest).abs() <= GRID_HIT_TOL {
            return Ok(self.samples[nearest as usize].x);
        }
        let k = pos.floor() as usize;
        let (a, b) = (self.samples[k], self.samples[k + 1]);
        Ok(hermite(a.x, a.dxdt, b.x, b.dxdt, self.step, pos - k as f64).x)
    }
}

/// Number of steps in `delay`, if it is a whole multiple of `step`.
pub fn steps_in(delay: f64, step: f64) -> Option<usize> {
    let ratio = delay / step;
    let n = ratio.round();
    if n >= 1.0 && (ratio - n).abs() <= MULTIPLE_TOL * ratio {
        Some(n as usize)
    } else {
        None
    }
}

/// Largest step not above `step` that divides both delays.
pub fn snap_step(step: f64, tau: f64, t_delay: f64) -> Result<f64> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("step", format!("must be > 0, got {step}")));
    }
    if steps_in(tau, step).is_some() && steps_in(t_delay, step).is_some() {
        return Ok(step);
    }
    let first = (tau / step).ceil().max(1.0) as usize;
    // Enough headroom for rational delay ratios with modest denominators.
    let limit = first.saturating_mul(1000).max(first + 1_000_000);
    (first..limit)
        .map(|n| tau / n as f64)
        .find(|&s| steps_in(t_delay, s).is_some())
        .ok_or(Error::IncommensurateDelays { step, tau, t_delay })
}

/// Integrates the delayed rate equation from `history` up to `t_end`.
///
/// `history` must end at `t = 0`, cover at least `max(tau, T)` and use the
/// same `step`. Each RK4 stage reads `x(t* - tau)` and `g(x(t* - T))` from the
/// buffer, projects its stage state and derivative onto the rate bounds, and
/// the accepted `dx/dt` at each grid point is stored back for interpolation.
pub fn integrate(
    params: &ModelParams,
    law: &CapacityLaw,
    history: HistoryBuffer,
    t_end: f64,
    step: f64,
) -> Result<Trajectory> {
    params.validate_positive()?;
    law.validate()?;
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("step", format!("must be > 0, got {step}")));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::invalid("t_end", format!("must be > 0, got {t_end}")));
    }
    if (history.step - step).abs() > 1e-12 * step {
        return Err(Error::invalid(
            "step",
            format!("history step {} differs from step {step}", history.step),
        ));
    }
    let n_tau = steps_in(params.round_trip_delay, step).ok_or(Error::DelayNotMultiple {
        name: "tau",
        delay: params.round_trip_delay,
        step,
    })?;
    let n_cap = steps_in(params.capacity_delay, step).ok_or(Error::DelayNotMultiple {
        name: "T_delay",
        delay: params.capacity_delay,
        step,
    })?;
    if history.zero_index + 1 != history.samples.len() {
        return Err(Error::invalid("history", "must end at t = 0"));
    }
    if history.zero_index < n_tau.max(n_cap) {
        return Err(Error::invalid(
            "history",
            format!(
                "spans {} s, needs at least max(tau, T) = {} s",
                -history.origin(),
                params.max_delay()
            ),
        ));
    }
    for (t, s) in history.iter() {
        if s.x < params.rate_min || s.x > params.rate_max {
            return Err(Error::HistoryOutOfBounds {
                t,
                value: s.x,
                lo: params.rate_min,
                hi: params.rate_max,
            });
        }
    }

    let ratio = t_end / step;
    let n_steps = if (ratio - ratio.round()).abs() <= MULTIPLE_TOL * ratio {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };

    let mut buf = history;
    buf.samples.reserve(n_steps);
    let zero = buf.zero_index;
    let h = step;
    let (lo, hi) = (params.rate_min, params.rate_max);

    let slope = |buf: &HistoryBuffer, x: f64, pos_tau: f64, pos_cap: f64| -> Result<f64> {
        let x = x.clamp(lo, hi);
        let x_delayed = buf.at_position(pos_tau).x;
        let c_delayed = model::capacity(law, buf.at_position(pos_cap).x)?;
        let d = model::rhs(x, x_delayed, c_delayed, params)?;
        Ok(model::clamp(x, d, params))
    };
    let diverged = |t: f64| {
        move |e: Error| Error::Diverged {
            t,
            reason: e.to_string(),
        }
    };

    let mut samples = Vec::with_capacity(n_steps + 1);
    for n in 0..n_steps {
        let i = zero + n;
        let t = n as f64 * h;
        let x = buf.samples[i].x;
        let (p_tau, p_cap) = ((i - n_tau) as f64, (i - n_cap) as f64);

        let k1 = slope(&buf, x, p_tau, p_cap).map_err(diverged(t))?;
        if n == 0 {
            buf.seam_dxdt = Some(k1);
        } else {
            buf.samples[i].dxdt = k1;
        }
        let c = model::capacity(law, x).map_err(diverged(t))?;
        samples.push(TrajectorySample { t, x, c, dxdt: k1 });

        let k2 = slope(&buf, x + 0.5 * h * k1, p_tau + 0.5, p_cap + 0.5).map_err(diverged(t))?;
        let k3 = slope(&buf, x + 0.5 * h * k2, p_tau + 0.5, p_cap + 0.5).map_err(diverged(t))?;
        let k4 = slope(&buf, x + h * k3, p_tau + 1.0, p_cap + 1.0).map_err(diverged(t))?;
        let next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() {
            return Err(Error::Diverged {
                t: t + h,
                reason: format!("non-finite rate {next}"),
            });
        }
        buf.samples.push(HistorySample {
            x: next.clamp(lo, hi),
            dxdt: 0.0,
        });
    }

    let i = zero + n_steps;
    let t = n_steps as f64 * h;
    let x = buf.samples[i].x;
    let d_end = slope(&buf, x, (i - n_tau) as f64, (i - n_cap) as f64).map_err(diverged(t))?;
    let c = model::capacity(law, x).map_err(diverged(t))?;
    samples.push(TrajectorySample {
        t,
        x,
        c,
        dxdt: d_end,
    });

    Ok(Trajectory {
        step,
        t_start: 0.0,
        t_end: t,
        samples,
        params: *params,
        law: *law,
    })
}

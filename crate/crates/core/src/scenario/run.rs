use std::path::PathBuf;

use crate::analysis::{
    check_theorem2, classify, lyapunov, solve_equilibrium, ClassKind, Classification,
    LyapunovSample, StabilityReport,
};
use crate::dde::{integrate, HistoryBuffer, Trajectory};
use crate::error::{Error, Result};
use crate::model::{CapacityLaw, Equilibrium, ModelParams};
use crate::scenario::config::{InitialRate, MarginRange, ScenarioConfig};
use crate::scenario::output;

/// Spacing of the Lyapunov samples written alongside a run, seconds.
pub const LYAPUNOV_EVERY: f64 = 1.0;

/// Everything one scenario run produces.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ScenarioConfig,
    pub trajectory: Trajectory,
    pub report: StabilityReport,
    pub classification: Classification,
    pub lyapunov: Vec<LyapunovSample>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.classification.kind.exit_code()
    }
}

/// Padded envelope of `lo..hi` and `x*`, kept inside the rate bounds and
/// where the capacity stays positive.
pub fn padded_range(
    p: &ModelParams,
    law: &CapacityLaw,
    eq: &Equilibrium,
    lo: f64,
    hi: f64,
) -> (f64, f64) {
    let (lo, hi) = (lo.min(eq.x_star), hi.max(eq.x_star));
    let pad = (0.2 * (hi - lo)).max(1e-3 * eq.x_star);
    let mut upper = (hi + pad).min(p.rate_max);
    if let CapacityLaw::Affine { intercept, slope } = *law {
        upper = upper.min(intercept / slope * (1.0 - 1e-9));
    }
    ((lo - pad).max(p.rate_min), upper)
}

/// Range over which the stability margin is checked.
pub fn resolve_range(
    cfg: &ScenarioConfig,
    eq: &Equilibrium,
    traj: Option<&Trajectory>,
) -> (f64, f64) {
    match cfg.margin_range {
        MarginRange::Fixed(lo, hi) => (lo, hi),
        MarginRange::Auto => {
            let (lo, hi) = match traj {
                Some(t) => t.envelope(),
                None => {
                    let x0 = initial_rate(cfg, eq);
                    (x0, x0)
                }
            };
            padded_range(&cfg.params, &cfg.law, eq, lo, hi)
        }
    }
}

fn initial_rate(cfg: &ScenarioConfig, eq: &Equilibrium) -> f64 {
    match cfg.initial {
        InitialRate::Constant(x) => x,
        InitialRate::Equilibrium => eq.x_star,
    }
}

/// Analysis only: equilibrium, assumptions and the margin check.
pub fn check_scenario(cfg: &ScenarioConfig) -> Result<StabilityReport> {
    let cfg = cfg.clone().validated()?;
    let eq = solve_equilibrium(&cfg.params, &cfg.law)?;
    let range = resolve_range(&cfg, &eq, None);
    check_theorem2(&cfg.params, &cfg.law, range, cfg.grid_n)
}

/// Simulates and analyses a scenario without touching the filesystem.
pub fn simulate(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    let cfg = cfg.clone().validated()?;
    let p = &cfg.params;
    let eq = solve_equilibrium(p, &cfg.law)?;
    let history = HistoryBuffer::constant(cfg.step, p.max_delay(), initial_rate(&cfg, &eq))?;
    let trajectory = integrate(p, &cfg.law, history, cfg.t_end, cfg.step)?;

    let range = resolve_range(&cfg, &eq, Some(&trajectory));
    let report = check_theorem2(p, &cfg.law, range, cfg.grid_n)?;

    let classification = match classify(&trajectory, &report.equilibrium, &cfg.tolerances) {
        Ok(c) => c,
        Err(Error::HorizonTooShort { .. }) => Classification {
            kind: ClassKind::Undetermined,
            final_error: (trajectory.last().x - report.equilibrium.x_star).abs(),
            tail_peak_to_peak: f64::NAN,
            mid_peak_to_peak: f64::NAN,
            settling_time: None,
        },
        Err(e) => return Err(e),
    };
    let lyapunov = lyapunov::lyapunov_series(
        &trajectory,
        &report.equilibrium,
        LYAPUNOV_EVERY,
        lyapunov::DEFAULT_NODES,
    )?;

    Ok(RunOutcome {
        config: cfg,
        trajectory,
        report,
        classification,
        lyapunov,
    })
}

/// Runs the full pipeline and writes its files into `cfg.out_dir`.
///
/// Returns the outcome and the written paths. If any file fails to write,
/// the ones already written are removed.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(RunOutcome, Vec<PathBuf>)> {
    let outcome = simulate(cfg)?;
    let files = output::write_run(&outcome)?;
    Ok((outcome, files))
}

//! Files written by a run: trajectory and diagnostic CSVs, a text report,
//! an SVG plot, and the configuration echo.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::{LyapunovSample, StabilityReport};
use crate::dde::Trajectory;
use crate::error::{Error, Result};
use crate::model::CapacityLaw;
use crate::scenario::config::InitialRate;
use crate::scenario::run::RunOutcome;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const LYAPUNOV_FILE: &str = "lyapunov.csv";
pub const MARGIN_FILE: &str = "margin.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const PLOT_FILE: &str = "plot.svg";
pub const ECHO_FILE: &str = "scenario.toml";

/// 17 significant digits, the shortest width that round-trips every f64.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::with_capacity(80 * traj.samples.len() + 16);
    s.push_str("t,x,c,dxdt\n");
    for p in &traj.samples {
        let _ = writeln!(s, "{},{},{},{}", num(p.t), num(p.x), num(p.c), num(p.dxdt));
    }
    s
}

pub fn lyapunov_csv(samples: &[LyapunovSample]) -> String {
    let mut s = String::from("t,V\n");
    for p in samples {
        let _ = writeln!(s, "{},{}", num(p.t), num(p.v));
    }
    s
}

pub fn margin_csv(report: &StabilityReport) -> String {
    let mut s = String::from("x,margin\n");
    for p in &report.margin_profile {
        let _ = writeln!(s, "{},{}", num(p.x), num(p.margin));
    }
    s
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), num)
}

/// Writes the stability part of a report (shared by `run` and `check`).
pub fn write_stability(s: &mut String, report: &StabilityReport) {
    let eq = &report.equilibrium;
    let _ = writeln!(s, "[equilibrium]");
    let _ = writeln!(s, "x_star = {}", num(eq.x_star));
    let _ = writeln!(s, "c_star = {}", num(eq.c_star));
    let _ = writeln!(s, "residual = {}", num(eq.residual));
    let _ = writeln!(s, "\n[assumptions]");
    if report.assumption_violations.is_empty() {
        let _ = writeln!(s, "violations = none");
    }
    for v in &report.assumption_violations {
        let _ = writeln!(s, "violation = {v}");
    }
    let _ = writeln!(s, "\n[stability_margin]");
    let _ = writeln!(
        s,
        "range = {}, {}",
        num(report.range.0),
        num(report.range.1)
    );
    let _ = writeln!(s, "grid_n = {}", report.grid_n);
    let _ = writeln!(s, "min_margin = {}", num(report.min_margin));
    let _ = writeln!(s, "argmin_x = {}", num(report.argmin));
    let _ = writeln!(s, "verdict = {}", report.verdict);
}

pub fn report_text(out: &RunOutcome) -> String {
    let cfg = &out.config;
    let p = &cfg.params;
    let mut s = String::new();
    let _ = writeln!(s, "# delaylab run report: {}", cfg.name);
    let _ = writeln!(s, "\n[parameters]");
    let _ = writeln!(s, "kappa = {:?}", p.gain);
    let _ = writeln!(s, "a = {:?}", p.utility_exponent);
    let _ = writeln!(s, "b = {:?}", p.price_exponent);
    let _ = writeln!(s, "h_gain = {:?}", p.price_gain);
    let _ = writeln!(s, "tau = {:?}", p.round_trip_delay);
    let _ = writeln!(s, "T_delay = {:?}", p.capacity_delay);
    let _ = writeln!(s, "x_bounds = {:?}, {:?}", p.rate_min, p.rate_max);
    match cfg.law {
        CapacityLaw::Affine { intercept, slope } => {
            let _ = writeln!(s, "capacity = {intercept:?} - {slope:?} x");
        }
        CapacityLaw::Constant { level } => {
            let _ = writeln!(s, "capacity = {level:?}");
        }
    }
    match cfg.initial {
        InitialRate::Constant(x) => {
            let _ = writeln!(s, "initial_x = {x:?}");
        }
        InitialRate::Equilibrium => {
            let _ = writeln!(s, "initial_x = equilibrium");
        }
    }

    let traj = &out.trajectory;
    let _ = writeln!(s, "\n[integration]");
    let _ = writeln!(s, "method = rk4 + cubic hermite history");
    let _ = writeln!(s, "step = {:?}", cfg.step);
    if let Some(snap) = cfg.step_snap {
        let _ = writeln!(
            s,
            "step_snapped_from = {:?} (delays must be whole multiples of the step)",
            snap.requested
        );
    }
    let _ = writeln!(s, "t_end = {:?}", traj.t_end);
    let _ = writeln!(s, "samples = {}", traj.samples.len());
    let (lo, hi) = traj.envelope();
    let _ = writeln!(s, "x_envelope = {}, {}", num(lo), num(hi));
    let _ = writeln!(s, "x_final = {}", num(traj.last().x));
    let _ = writeln!(s);

    write_stability(&mut s, &out.report);

    let c = &out.classification;
    let _ = writeln!(s, "\n[classification]");
    let _ = writeln!(s, "kind = {}", c.kind);
    let _ = writeln!(s, "final_error = {}", num(c.final_error));
    let _ = writeln!(s, "tail_peak_to_peak = {}", num(c.tail_peak_to_peak));
    let _ = writeln!(s, "mid_peak_to_peak = {}", num(c.mid_peak_to_peak));
    let _ = writeln!(s, "settling_time = {}", opt(c.settling_time));

    let _ = writeln!(s, "\n[lyapunov]");
    let _ = writeln!(s, "samples = {}", out.lyapunov.len());
    if let (Some(first), Some(last)) = (out.lyapunov.first(), out.lyapunov.last()) {
        let max_rise = out
            .lyapunov
            .windows(2)
            .map(|w| w[1].v - w[0].v)
            .fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(s, "first = {} at t = {:?}", num(first.v), first.t);
        let _ = writeln!(s, "last = {} at t = {:?}", num(last.v), last.t);
        if max_rise.is_finite() {
            let _ = writeln!(s, "max_step_increase = {}", num(max_rise));
        }
    }
    s
}

/// Static SVG of `x(t)` and `c(t)`.
pub fn plot_svg(traj: &Trajectory) -> String {
    const W: f64 = 800.0;
    const H: f64 = 480.0;
    const L: f64 = 70.0;
    const R: f64 = 20.0;
    const T: f64 = 30.0;
    const B: f64 = 50.0;

    let stride = (traj.samples.len() / 1500).max(1);
    let pts: Vec<_> = traj
        .samples
        .iter()
        .step_by(stride)
        .chain(std::iter::once(traj.last()))
        .collect();
    let (mut y_lo, mut y_hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, p| {
            (acc.0.min(p.x).min(p.c), acc.1.max(p.x).max(p.c))
        });
    let pad = 0.05 * (y_hi - y_lo).max(1e-9);
    y_lo -= pad;
    y_hi += pad;
    let span_t = (traj.t_end - traj.t_start).max(1e-12);
    let sx = |t: f64| L + (t - traj.t_start) / span_t * (W - L - R);
    let sy = |y: f64| T + (y_hi - y) / (y_hi - y_lo) * (H - T - B);

    let poly = |f: &dyn Fn(&crate::dde::TrajectorySample) -> f64| {
        pts.iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.t), sy(f(p))))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{L}" y="{T}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - L - R,
        H - T - B
    );
    for k in 0..=5 {
        let t = traj.t_start + span_t * k as f64 / 5.0;
        let y = y_lo + (y_hi - y_lo) * k as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{t:.1}</text>"#,
            sx(t),
            H - B + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.3}</text>"#,
            L - 6.0,
            sy(y) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t (s)</text>"#,
        (W + L - R) / 2.0,
        H - 10.0
    );
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{}"/>"##,
        poly(&|p| p.x)
    );
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#d62728" stroke-width="1.5" points="{}"/>"##,
        poly(&|p| p.c)
    );
    let _ = writeln!(
        s,
        r##"<text x="{:.2}" y="20" fill="#1f77b4">x(t) source rate</text>"##,
        L + 10.0
    );
    let _ = writeln!(
        s,
        r##"<text x="{:.2}" y="20" fill="#d62728">c(t) link capacity</text>"##,
        L + 160.0
    );
    s.push_str("</svg>\n");
    s
}

/// Writes `(name, contents)` pairs into `dir`; on failure removes what was
/// already written.
pub(crate) fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        if let Err(e) = std::fs::write(&path, contents) {
            for done in &written {
                let _ = std::fs::remove_file(done);
            }
            return Err(Error::io(path, e));
        }
        written.push(path);
    }
    Ok(written)
}

pub fn write_run(out: &RunOutcome) -> Result<Vec<PathBuf>> {
    let files = [
        (TRAJECTORY_FILE, trajectory_csv(&out.trajectory)),
        (LYAPUNOV_FILE, lyapunov_csv(&out.lyapunov)),
        (MARGIN_FILE, margin_csv(&out.report)),
        (REPORT_FILE, report_text(out)),
        (PLOT_FILE, plot_svg(&out.trajectory)),
        (ECHO_FILE, out.config.to_scenario_string()),
    ];
    write_all(&out.config.out_dir, &files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dde::TrajectorySample;
    use crate::model::ModelParams;

    fn tiny() -> Trajectory {
        Trajectory {
            step: 0.5,
            t_start: 0.0,
            t_end: 1.0,
            samples: (0..3)
                .map(|k| TrajectorySample {
                    t: 0.5 * k as f64,
                    x: 1.0 + 0.1 * k as f64,
                    c: 4.0 - 0.1 * k as f64,
                    dxdt: 0.2,
                })
                .collect(),
            params: ModelParams::new(1.0, 1.5, 0.8, 3.0, 2.0),
            law: CapacityLaw::affine(5.0, 1.0),
        }
    }

    #[test]
    fn csv_layout() {
        let csv = trajectory_csv(&tiny());
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,x,c,dxdt");
        assert_eq!(lines.len(), 4);
        assert_eq!(
            lines[1],
            "0.0000000000000000e0,1.0000000000000000e0,4.0000000000000000e0,2.0000000000000001e-1"
        );
        assert!(csv.ends_with('\n'));
        // every field parses back to the same double
        for line in &lines[1..] {
            for field in line.split(',') {
                let v: f64 = field.parse().unwrap();
                assert_eq!(num(v), field);
            }
        }
    }

    #[test]
    fn svg_is_self_contained() {
        let svg = plot_svg(&tiny());
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        // a directory where a file should go makes the second write fail
        std::fs::create_dir(dir.path().join("b.txt")).unwrap();
        let err = write_all(dir.path(), &[("a.txt", "x".into()), ("b.txt", "y".into())]);
        assert!(err.is_err());
        assert!(!dir.path().join("a.txt").exists());
    }
}

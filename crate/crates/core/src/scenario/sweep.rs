//! One-parameter sweeps run in parallel.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{ClassKind, Verdict};
use crate::error::{Error, Result};
use crate::model::CapacityLaw;
use crate::scenario::config::ScenarioConfig;
use crate::scenario::output::write_all;
use crate::scenario::run::simulate;

pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepParam {
    A,
    B,
    Kappa,
    Tau,
    TDelay,
    Intercept,
    Slope,
}

impl SweepParam {
    pub const ALL: [SweepParam; 7] = [
        SweepParam::A,
        SweepParam::B,
        SweepParam::Kappa,
        SweepParam::Tau,
        SweepParam::TDelay,
        SweepParam::Intercept,
        SweepParam::Slope,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::A => "a",
            SweepParam::B => "b",
            SweepParam::Kappa => "kappa",
            SweepParam::Tau => "tau",
            SweepParam::TDelay => "T_delay",
            SweepParam::Intercept => "intercept",
            SweepParam::Slope => "slope",
        }
    }

    /// Copy of `cfg` with this parameter set to `value`, re-validated.
    pub fn apply(self, cfg: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = cfg.clone();
        let p = &mut cfg.params;
        match self {
            SweepParam::A => p.utility_exponent = value,
            SweepParam::B => p.price_exponent = value,
            SweepParam::Kappa => p.gain = value,
            SweepParam::Tau => p.round_trip_delay = value,
            SweepParam::TDelay => p.capacity_delay = value,
            SweepParam::Intercept | SweepParam::Slope => match &mut cfg.law {
                CapacityLaw::Affine { intercept, slope } => {
                    if self == SweepParam::Intercept {
                        *intercept = value;
                    } else {
                        *slope = value;
                    }
                }
                CapacityLaw::Constant { .. } => {
                    return Err(Error::invalid(
                        self.name(),
                        "only an affine capacity law has this parameter",
                    ))
                }
            },
        }
        cfg.validated()
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = SweepParam::ALL.iter().map(|p| p.name()).collect();
                Error::invalid(
                    "param",
                    format!("unknown `{s}`, expected one of {}", names.join(", ")),
                )
            })
    }
}

/// Parses `v1,v2,...` or an inclusive range `lo:hi:step`.
///
/// Range values are rounded to 12 decimals so `0.1:0.3:0.1` yields exactly
/// `0.1, 0.2, 0.3`.
pub fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: String| Error::invalid("values", why);
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad(format!("`{}` is not a finite number", s.trim())))
    };
    let values = if spec.contains(':') {
        let parts: Vec<_> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("range `{spec}` must be lo:hi:step")));
        }
        let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || hi < lo {
            return Err(bad(format!("range `{spec}` needs lo <= hi and step > 0")));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        if n > 100_000 {
            return Err(bad(format!("range `{spec}` has more than 100000 values")));
        }
        (0..=n)
            .map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        return Err(bad("no values given".into()));
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub x_star: Option<f64>,
    pub min_margin: Option<f64>,
    pub verdict: Option<Verdict>,
    pub classification: Option<ClassKind>,
    pub final_error: Option<f64>,
    pub tail_peak_to_peak: Option<f64>,
    /// Set when this value could not be run.
    pub error: Option<String>,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
    pub largest_certified: Option<f64>,
    pub smallest_oscillating: Option<f64>,
    /// Adjacent swept values where the verdict first turns from certified to
    /// not certified, in increasing order of the parameter.
    pub certification_bracket: Option<(f64, f64)>,
    /// Places where the verdict or classification flips back.
    pub monotonicity_flags: Vec<String>,
}

fn run_one(cfg: &ScenarioConfig, param: SweepParam, value: f64) -> SweepRow {
    let outcome = param.apply(cfg, value).and_then(|c| simulate(&c));
    match outcome {
        Ok(out) => SweepRow {
            value,
            x_star: Some(out.report.equilibrium.x_star),
            min_margin: Some(out.report.min_margin),
            verdict: Some(out.report.verdict),
            classification: Some(out.classification.kind),
            final_error: Some(out.classification.final_error),
            tail_peak_to_peak: Some(out.classification.tail_peak_to_peak),
            error: None,
        },
        Err(e) => SweepRow {
            value,
            x_star: None,
            min_margin: None,
            verdict: None,
            classification: None,
            final_error: None,
            tail_peak_to_peak: None,
            error: Some(e.to_string()),
        },
    }
}

/// Runs `cfg` once per value. Rows come back in the order of `values`.
pub fn sweep(cfg: &ScenarioConfig, param: SweepParam, values: &[f64]) -> SweepReport {
    let rows: Vec<SweepRow> = values.par_iter().map(|&v| run_one(cfg, param, v)).collect();
    summarize(param, rows)
}

fn summarize(param: SweepParam, rows: Vec<SweepRow>) -> SweepReport {
    let max_where = |pred: &dyn Fn(&SweepRow) -> bool| {
        rows.iter()
            .filter(|r| pred(r))
            .map(|r| r.value)
            .reduce(f64::max)
    };
    let min_where = |pred: &dyn Fn(&SweepRow) -> bool| {
        rows.iter()
            .filter(|r| pred(r))
            .map(|r| r.value)
            .reduce(f64::min)
    };
    let largest_certified = max_where(&|r| r.verdict == Some(Verdict::CertifiedStable));
    let smallest_oscillating = min_where(&|r| r.classification == Some(ClassKind::Oscillating));

    let mut ordered: Vec<&SweepRow> = rows.iter().filter(|r| r.is_ok()).collect();
    ordered.sort_by(|a, b| a.value.total_cmp(&b.value));

    let certification_bracket = ordered.windows(2).find_map(|w| {
        (w[0].verdict == Some(Verdict::CertifiedStable)
            && w[1].verdict == Some(Verdict::NotCertified))
        .then_some((w[0].value, w[1].value))
    });

    let mut monotonicity_flags = Vec::new();
    let flips = |get: &dyn Fn(&SweepRow) -> bool| -> Vec<f64> {
        ordered
            .windows(2)
            .filter(|w| get(w[0]) != get(w[1]))
            .map(|w| w[1].value)
            .collect()
    };
    let cert_flips = flips(&|r| r.verdict == Some(Verdict::CertifiedStable));
    if cert_flips.len() > 1 {
        monotonicity_flags.push(format!(
            "verdict changes {} times, at {}",
            cert_flips.len(),
            join(&cert_flips)
        ));
    }
    let osc_flips = flips(&|r| r.classification == Some(ClassKind::Oscillating));
    if osc_flips.len() > 1 {
        monotonicity_flags.push(format!(
            "oscillation onset changes {} times, at {}",
            osc_flips.len(),
            join(&osc_flips)
        ));
    }

    SweepReport {
        param,
        rows,
        largest_certified,
        smallest_oscillating,
        certification_bracket,
        monotonicity_flags,
    }
}

fn join(vs: &[f64]) -> String {
    vs.iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn sweep_csv(report: &SweepReport) -> String {
    fn field(v: Option<f64>) -> String {
        v.map(|x| format!("{x:.16e}")).unwrap_or_default()
    }
    let mut s = String::from(
        "value,status,x_star,min_margin,verdict,classification,final_error,tail_peak_to_peak,message\n",
    );
    for r in &report.rows {
        let status = if r.is_ok() { "ok" } else { "error" };
        let message = r
            .error
            .as_deref()
            .map(|m| format!("\"{}\"", m.replace('"', "\"\"")))
            .unwrap_or_default();
        let _ = writeln!(
            s,
            "{:?},{status},{},{},{},{},{},{},{message}",
            r.value,
            field(r.x_star),
            field(r.min_margin),
            r.verdict.map(|v| v.to_string()).unwrap_or_default(),
            r.classification.map(|c| c.to_string()).unwrap_or_default(),
            field(r.final_error),
            field(r.tail_peak_to_peak),
        );
    }
    s
}

pub fn write_sweep(report: &SweepReport, dir: &Path) -> Result<PathBuf> {
    let mut paths = write_all(dir, &[(SWEEP_FILE, sweep_csv(report))])?;
    Ok(paths.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ScenarioConfig {
        let text = "[model]\nkappa = 1\na = 1.5\nb = 0.2\ntau = 3\nT_delay = 2\n\
                    [capacity]\nlaw = \"affine\"\nintercept = 5\nslope = 1\n[initial]\nx = 1\n";
        ScenarioConfig::parse(text, Path::new("s.scenario")).unwrap()
    }

    #[test]
    fn value_lists() {
        assert_eq!(parse_values("0.1:0.3:0.1").unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(parse_values("1, 2.5,4").unwrap(), vec![1.0, 2.5, 4.0]);
        assert_eq!(parse_values("2:2:1").unwrap(), vec![2.0]);
        assert!(parse_values("1:0:0.1").is_err());
        assert!(parse_values("1:2").is_err());
        assert!(parse_values("a,b").is_err());
        assert!(parse_values("0:1:0").is_err());
    }

    #[test]
    fn names_round_trip() {
        for p in SweepParam::ALL {
            assert_eq!(p.name().parse::<SweepParam>().unwrap(), p);
        }
        assert!("gamma".parse::<SweepParam>().is_err());
    }

    #[test]
    fn apply_revalidates() {
        let cfg = base();
        let t = SweepParam::Tau.apply(&cfg, 4.5).unwrap();
        assert_eq!(t.params.round_trip_delay, 4.5);
        // tau below T breaks the ordering of the delays
        assert!(SweepParam::Tau.apply(&cfg, 1.0).is_err());
        assert!(SweepParam::B.apply(&cfg, -1.0).is_err());
    }

    #[test]
    fn rows_keep_input_order_and_errors() {
        let cfg = base().with_t_end(40.0).unwrap();
        let report = sweep(&cfg, SweepParam::B, &[0.8, -1.0, 0.2]);
        let values: Vec<_> = report.rows.iter().map(|r| r.value).collect();
        assert_eq!(values, vec![0.8, -1.0, 0.2]);
        assert!(report.rows[0].is_ok() && report.rows[2].is_ok());
        assert!(!report.rows[1].is_ok());
        assert_eq!(report.largest_certified, Some(0.2));
        assert_eq!(report.certification_bracket, Some((0.2, 0.8)));
        let csv = sweep_csv(&report);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(2).unwrap().starts_with("-1.0,error,,"));
    }
}

//! Scenario files.
//!
//! A scenario is a small TOML document with fixed sections:
//!
//! ```toml
//! [model]
//! kappa = 1.0
//! a = 1.5
//! b = 0.8
//! h_gain = 1.0        # optional, default 1
//! tau = 3.0
//! T_delay = 2.0
//! x_min = 0.001       # optional
//! x_max = 1000.0      # optional
//!
//! [capacity]
//! law = "affine"      # or "constant" with `level = ...`
//! intercept = 5.0
//! slope = 1.0
//!
//! [initial]
//! x = 1.0             # or "equilibrium"
//!
//! [run]               # optional section
//! t_end = 200.0
//! step = 0.01
//!
//! [analysis]          # optional section
//! margin_range = "auto"   # or [0.5, 3.0]
//! grid_n = 256
//! tol_conv = 0.01
//! tol_osc = 0.1
//! tail_fraction = 0.2
//!
//! [output]            # optional section
//! dir = "out"
//! ```
//!
//! Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::analysis::Tolerances;
use crate::dde::snap_step;
use crate::error::{Error, Result};
use crate::model::{CapacityLaw, ModelParams};

pub const DEFAULT_T_END: f64 = 200.0;
pub const DEFAULT_STEP: f64 = 0.01;
pub const DEFAULT_GRID_N: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialRate {
    /// Constant history `x(s) = value` on `[-max(tau, T), 0]`.
    Constant(f64),
    /// Constant history at the solved equilibrium.
    Equilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginRange {
    /// Envelope of the run (or of `x0` and `x*` without a run), padded.
    Auto,
    Fixed(f64, f64),
}

/// Requested step and the step actually used after snapping to the delays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSnap {
    pub requested: f64,
    pub applied: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub params: ModelParams,
    pub law: CapacityLaw,
    pub initial: InitialRate,
    pub t_end: f64,
    pub step: f64,
    /// Set when `step` was reduced to divide both delays.
    pub step_snap: Option<StepSnap>,
    pub margin_range: MarginRange,
    pub grid_n: usize,
    pub tolerances: Tolerances,
    pub out_dir: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    model: RawModel,
    capacity: RawCapacity,
    initial: RawInitial,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    analysis: RawAnalysis,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kappa: f64,
    a: f64,
    b: f64,
    #[serde(default = "one")]
    h_gain: f64,
    tau: f64,
    #[serde(rename = "T_delay")]
    t_delay: f64,
    #[serde(default = "default_x_min")]
    x_min: f64,
    #[serde(default = "default_x_max")]
    x_max: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCapacity {
    law: String,
    intercept: Option<f64>,
    slope: Option<f64>,
    level: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    x: RawInit,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawInit {
    Value(f64),
    Preset(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    #[serde(default = "default_t_end")]
    t_end: f64,
    #[serde(default = "default_step")]
    step: f64,
}

impl Default for RawRun {
    fn default() -> Self {
        Self {
            t_end: DEFAULT_T_END,
            step: DEFAULT_STEP,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawRange {
    Keyword(String),
    Bounds([f64; 2]),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    #[serde(default)]
    margin_range: Option<RawRange>,
    #[serde(default = "default_grid_n")]
    grid_n: usize,
    #[serde(default = "default_tol_conv")]
    tol_conv: f64,
    #[serde(default = "default_tol_osc")]
    tol_osc: f64,
    #[serde(default = "default_tail_fraction")]
    tail_fraction: f64,
}

impl Default for RawAnalysis {
    fn default() -> Self {
        let tol = Tolerances::default();
        Self {
            margin_range: None,
            grid_n: DEFAULT_GRID_N,
            tol_conv: tol.tol_conv,
            tol_osc: tol.tol_osc,
            tail_fraction: tol.tail_fraction,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default = "default_dir")]
    dir: PathBuf,
}

impl Default for RawOutput {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

fn one() -> f64 {
    1.0
}
fn default_x_min() -> f64 {
    ModelParams::DEFAULT_RATE_MIN
}
fn default_x_max() -> f64 {
    ModelParams::DEFAULT_RATE_MAX
}
fn default_t_end() -> f64 {
    DEFAULT_T_END
}
fn default_step() -> f64 {
    DEFAULT_STEP
}
fn default_grid_n() -> usize {
    DEFAULT_GRID_N
}
fn default_tol_conv() -> f64 {
    Tolerances::default().tol_conv
}
fn default_tol_osc() -> f64 {
    Tolerances::default().tol_osc
}
fn default_tail_fraction() -> f64 {
    Tolerances::default().tail_fraction
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Maps a model-level field name to its `section.key` spelling.
fn qualified(field: &str) -> String {
    match field {
        f if f.contains('.') => f.to_string(),
        "intercept" | "slope" | "level" => format!("capacity.{field}"),
        "step" | "t_end" => format!("run.{field}"),
        _ => format!("model.{field}"),
    }
}

impl ScenarioConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses scenario text; `path` is used for diagnostics and the name.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().trim().to_string(),
        })?;
        let config_err = |field: &str, reason: String| Error::Config {
            path: path.to_path_buf(),
            field: field.to_string(),
            reason,
        };

        let params = ModelParams {
            gain: raw.model.kappa,
            utility_exponent: raw.model.a,
            price_exponent: raw.model.b,
            price_gain: raw.model.h_gain,
            round_trip_delay: raw.model.tau,
            capacity_delay: raw.model.t_delay,
            rate_min: raw.model.x_min,
            rate_max: raw.model.x_max,
        };

        let cap = &raw.capacity;
        let require = |key: &str, v: Option<f64>| {
            v.ok_or_else(|| {
                config_err(
                    &format!("capacity.{key}"),
                    format!("required for law `{}`", cap.law),
                )
            })
        };
        let law = match cap.law.as_str() {
            "affine" => {
                if cap.level.is_some() {
                    return Err(config_err(
                        "capacity.level",
                        "not used by the affine law".into(),
                    ));
                }
                CapacityLaw::affine(
                    require("intercept", cap.intercept)?,
                    require("slope", cap.slope)?,
                )
            }
            "constant" => {
                if cap.intercept.is_some() || cap.slope.is_some() {
                    return Err(config_err(
                        "capacity.law",
                        "constant law takes only `level`".into(),
                    ));
                }
                CapacityLaw::constant(require("level", cap.level)?)
            }
            other => {
                return Err(config_err(
                    "capacity.law",
                    format!("unknown law `{other}` (expected \"affine\" or \"constant\")"),
                ))
            }
        };

        let initial = match raw.initial.x {
            RawInit::Value(v) => InitialRate::Constant(v),
            RawInit::Preset(ref s) if s == "equilibrium" => InitialRate::Equilibrium,
            RawInit::Preset(s) => {
                return Err(config_err(
                    "initial.x",
                    format!("unknown preset `{s}` (expected a number or \"equilibrium\")"),
                ))
            }
        };

        let margin_range = match raw.analysis.margin_range {
            None => MarginRange::Auto,
            Some(RawRange::Keyword(ref s)) if s == "auto" => MarginRange::Auto,
            Some(RawRange::Keyword(s)) => {
                return Err(config_err(
                    "analysis.margin_range",
                    format!("expected \"auto\" or [lo, hi], got `{s}`"),
                ))
            }
            Some(RawRange::Bounds([lo, hi])) => MarginRange::Fixed(lo, hi),
        };

        let name = path.file_stem().map_or_else(
            || "scenario".to_string(),
            |s| s.to_string_lossy().into_owned(),
        );
        let cfg = Self {
            name,
            params,
            law,
            initial,
            t_end: raw.run.t_end,
            step: raw.run.step,
            step_snap: None,
            margin_range,
            grid_n: raw.analysis.grid_n,
            tolerances: Tolerances {
                tol_conv: raw.analysis.tol_conv,
                tol_osc: raw.analysis.tol_osc,
                tail_fraction: raw.analysis.tail_fraction,
            },
            out_dir: raw.output.dir,
        };
        cfg.validated().map_err(|e| match e {
            Error::InvalidParameter { field, reason } => config_err(&qualified(&field), reason),
            other => other,
        })
    }

    /// Checks every field and snaps the step to the delays.
    pub fn validated(mut self) -> Result<Self> {
        self.params.validate()?;
        self.law.validate()?;
        if let InitialRate::Constant(x0) = self.initial {
            if !(x0 >= self.params.rate_min && x0 <= self.params.rate_max) {
                return Err(Error::invalid(
                    "initial.x",
                    format!(
                        "{x0} must lie in [x_min, x_max] = [{}, {}]",
                        self.params.rate_min, self.params.rate_max
                    ),
                ));
            }
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::invalid(
                "t_end",
                format!("must be > 0, got {}", self.t_end),
            ));
        }
        if let MarginRange::Fixed(lo, hi) = self.margin_range {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::invalid(
                    "analysis.margin_range",
                    format!("need 0 < lo < hi, got [{lo}, {hi}]"),
                ));
            }
        }
        if self.grid_n < crate::analysis::stability::MIN_GRID {
            return Err(Error::invalid(
                "analysis.grid_n",
                format!(
                    "must be >= {}, got {}",
                    crate::analysis::stability::MIN_GRID,
                    self.grid_n
                ),
            ));
        }
        let tol = self.tolerances;
        if !(tol.tol_conv > 0.0 && tol.tol_osc > 0.0) {
            return Err(Error::invalid(
                "analysis.tol_conv",
                "tolerances must be > 0",
            ));
        }
        if !(tol.tail_fraction > 0.0 && tol.tail_fraction <= 0.5) {
            return Err(Error::invalid(
                "analysis.tail_fraction",
                format!("must be in (0, 0.5], got {}", tol.tail_fraction),
            ));
        }
        self.resnap()?;
        Ok(self)
    }

    /// Re-derives the step from the originally requested one after the
    /// delays or step changed.
    pub fn resnap(&mut self) -> Result<()> {
        let requested = self.step_snap.map_or(self.step, |s| s.requested);
        let applied = snap_step(
            requested,
            self.params.round_trip_delay,
            self.params.capacity_delay,
        )?;
        self.step = applied;
        self.step_snap = (applied != requested).then_some(StepSnap { requested, applied });
        Ok(())
    }

    pub fn with_step(mut self, step: f64) -> Result<Self> {
        self.step = step;
        self.step_snap = None;
        self.resnap()?;
        Ok(self)
    }

    pub fn with_t_end(self, t_end: f64) -> Result<Self> {
        Self { t_end, ..self }.validated()
    }

    pub fn with_out_dir(self, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            ..self
        }
    }

    /// Scenario text that reloads to this exact configuration.
    pub fn to_scenario_string(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(s, "# {}: configuration as run", self.name);
        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "kappa = {:?}", p.gain);
        let _ = writeln!(s, "a = {:?}", p.utility_exponent);
        let _ = writeln!(s, "b = {:?}", p.price_exponent);
        let _ = writeln!(s, "h_gain = {:?}", p.price_gain);
        let _ = writeln!(s, "tau = {:?}", p.round_trip_delay);
        let _ = writeln!(s, "T_delay = {:?}", p.capacity_delay);
        let _ = writeln!(s, "x_min = {:?}", p.rate_min);
        let _ = writeln!(s, "x_max = {:?}", p.rate_max);
        let _ = writeln!(s, "\n[capacity]");
        match self.law {
            CapacityLaw::Affine { intercept, slope } => {
                let _ = writeln!(
                    s,
                    "law = \"affine\"\nintercept = {intercept:?}\nslope = {slope:?}"
                );
            }
            CapacityLaw::Constant { level } => {
                let _ = writeln!(s, "law = \"constant\"\nlevel = {level:?}");
            }
        }
        let _ = writeln!(s, "\n[initial]");
        match self.initial {
            InitialRate::Constant(x) => {
                let _ = writeln!(s, "x = {x:?}");
            }
            InitialRate::Equilibrium => {
                let _ = writeln!(s, "x = \"equilibrium\"");
            }
        }
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "t_end = {:?}", self.t_end);
        let _ = writeln!(s, "step = {:?}", self.step);
        let _ = writeln!(s, "\n[analysis]");
        match self.margin_range {
            MarginRange::Auto => {
                let _ = writeln!(s, "margin_range = \"auto\"");
            }
            MarginRange::Fixed(lo, hi) => {
                let _ = writeln!(s, "margin_range = [{lo:?}, {hi:?}]");
            }
        }
        let _ = writeln!(s, "grid_n = {}", self.grid_n);
        let _ = writeln!(s, "tol_conv = {:?}", self.tolerances.tol_conv);
        let _ = writeln!(s, "tol_osc = {:?}", self.tolerances.tol_osc);
        let _ = writeln!(s, "tail_fraction = {:?}", self.tolerances.tail_fraction);
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "dir = {:?}", self.out_dir.to_string_lossy());
        s
    }
}

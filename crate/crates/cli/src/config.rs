//! Experiment configuration files.
//!
//! A config is a TOML document with the sections `model`, `integrator`,
//! `sampling`, `perturbation`, `analysis` and `output`. Only `model` and
//! `analysis` are required. Unknown keys anywhere are rejected, and keys
//! that exist but do not apply to the chosen analysis kind are rejected
//! too, so a typo never silently falls back to a default.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use nlle_core::nlle::{
    geometric_then_linear, DEFAULT_DIRECTIONS_PER_POINT, DEFAULT_EPSILON, DEFAULT_SAMPLE_COUNT,
    DEFAULT_TAU_END, DEFAULT_TAU_POINTS, DEFAULT_TAU_START,
};
use nlle_core::integrate::{DEFAULT_INTERVAL, DEFAULT_SPINUP, DEFAULT_STEP};
use nlle_core::{Model, SaturationParams, StateVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    pub name: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSection {
    #[serde(default = "default_step")]
    pub step: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection { step: DEFAULT_STEP }
    }
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSection {
    #[serde(default = "default_spinup")]
    pub spinup: f64,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_interval")]
    pub interval: f64,
    #[serde(default)]
    pub seed: u64,
    /// Spin-up start; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_init: Option<Vec<f64>>,
    /// Length of the seeded offset applied to `x_init`.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection {
            spinup: DEFAULT_SPINUP,
            count: DEFAULT_SAMPLE_COUNT,
            interval: DEFAULT_INTERVAL,
            seed: 0,
            x_init: None,
            jitter: default_jitter(),
        }
    }
}

fn default_spinup() -> f64 {
    DEFAULT_SPINUP
}
fn default_count() -> usize {
    DEFAULT_SAMPLE_COUNT
}
fn default_interval() -> f64 {
    DEFAULT_INTERVAL
}
fn default_jitter() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSection {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_directions")]
    pub directions_per_point: usize,
    /// Defaults to the sampling seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        PerturbationSection {
            epsilon: DEFAULT_EPSILON,
            directions_per_point: DEFAULT_DIRECTIONS_PER_POINT,
            seed: None,
        }
    }
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_directions() -> usize {
    DEFAULT_DIRECTIONS_PER_POINT
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalysisKind {
    Gle,
    Lle,
    Nlle,
    Spectrum,
    Localmap,
    FixedPoints,
    PesScan,
    VerifyToy,
}

impl AnalysisKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AnalysisKind::Gle => "gle",
            AnalysisKind::Lle => "lle",
            AnalysisKind::Nlle => "nlle",
            AnalysisKind::Spectrum => "spectrum",
            AnalysisKind::Localmap => "localmap",
            AnalysisKind::FixedPoints => "fixed-points",
            AnalysisKind::PesScan => "pes-scan",
            AnalysisKind::VerifyToy => "verify-toy",
        }
    }

    fn allowed_keys(&self) -> &'static [&'static str] {
        match self {
            AnalysisKind::Gle => &["total_time", "renorm_interval", "m"],
            AnalysisKind::Lle => &["tau"],
            AnalysisKind::Nlle | AnalysisKind::Localmap => &["tau_grid", "window", "slope_tol", "theta"],
            AnalysisKind::Spectrum => &["tau", "renorm_interval", "m"],
            AnalysisKind::FixedPoints => &["box", "grid_per_axis", "newton_tol"],
            AnalysisKind::PesScan => &["parameter", "lambda_grid", "equilibrium"],
            AnalysisKind::VerifyToy => &["n_basin", "horizon"],
        }
    }
}

impl fmt::Display for AnalysisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An explicit list of tau values or a generated geometric-then-linear grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauGridSpec {
    Explicit(Vec<f64>),
    Range(TauRange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauRange {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

/// `[lo, hi]` for every axis, or one `[lo, hi]` pair per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoxSpec {
    Uniform([f64; 2]),
    PerAxis(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSection {
    pub kind: AnalysisKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_grid: Option<TauGridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renorm_interval: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_per_axis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_basin: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

impl AnalysisSection {
    pub fn new(kind: AnalysisKind) -> Self {
        AnalysisSection {
            kind,
            tau_grid: None,
            tau: None,
            total_time: None,
            renorm_interval: None,
            m: None,
            window: None,
            slope_tol: None,
            theta: None,
            bounds: None,
            grid_per_axis: None,
            newton_tol: None,
            parameter: None,
            lambda_grid: None,
            equilibrium: None,
            n_basin: None,
            horizon: None,
        }
    }

    fn present_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut mark = |present: bool, key| {
            if present {
                keys.push(key)
            }
        };
        mark(self.tau_grid.is_some(), "tau_grid");
        mark(self.tau.is_some(), "tau");
        mark(self.total_time.is_some(), "total_time");
        mark(self.renorm_interval.is_some(), "renorm_interval");
        mark(self.m.is_some(), "m");
        mark(self.window.is_some(), "window");
        mark(self.slope_tol.is_some(), "slope_tol");
        mark(self.theta.is_some(), "theta");
        mark(self.bounds.is_some(), "box");
        mark(self.grid_per_axis.is_some(), "grid_per_axis");
        mark(self.newton_tol.is_some(), "newton_tol");
        mark(self.parameter.is_some(), "parameter");
        mark(self.lambda_grid.is_some(), "lambda_grid");
        mark(self.equilibrium.is_some(), "equilibrium");
        mark(self.n_basin.is_some(), "n_basin");
        mark(self.horizon.is_some(), "horizon");
        keys
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

/// Every problem found in a config, in document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationErrors(pub Vec<String>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration:")?;
        for e in &self.0 {
            write!(f, "\n  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

impl ExperimentConfig {
    /// Parses TOML text, rejecting unknown keys.
    pub fn from_toml(text: &str) -> Result<Self, ValidationErrors> {
        let de = toml::Deserializer::parse(text).map_err(|e| ValidationErrors(vec![e.to_string()]))?;
        let mut unknown = Vec::new();
        let parsed: Result<ExperimentConfig, _> =
            serde_ignored::deserialize(de, |path| unknown.push(path.to_string()));
        let mut errors: Vec<String> = unknown.into_iter().map(|k| format!("unknown key `{k}`")).collect();
        match parsed {
            Ok(cfg) if errors.is_empty() => Ok(cfg),
            Ok(_) => Err(ValidationErrors(errors)),
            Err(e) => {
                errors.push(e.to_string().trim_end().to_string());
                Err(ValidationErrors(errors))
            }
        }
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ValidationErrors> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ValidationErrors(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_toml(&text)
    }

    /// Overrides every seed in the config.
    pub fn set_seed(&mut self, seed: u64) {
        self.sampling.seed = seed;
        self.perturbation.seed = Some(seed);
    }

    pub fn perturbation_seed(&self) -> u64 {
        self.perturbation.seed.unwrap_or(self.sampling.seed)
    }

    /// Checks every value and resolves analysis defaults.
    pub fn validate(&self) -> Result<Experiment, ValidationErrors> {
        let mut errors = Vec::new();
        let model = match Model::from_parameters(&self.model.name, &self.model.parameters) {
            Ok(m) => Some(m),
            Err(e) => {
                errors.push(format!("model: {e}"));
                None
            }
        };
        let n = model.as_ref().map(Model::dimension);

        let step = self.integrator.step;
        if !(step.is_finite() && step > 0.0) {
            errors.push(format!("integrator.step must be positive, got {step}"));
        }
        let s = &self.sampling;
        positive(&mut errors, "sampling.interval", s.interval);
        if !(s.spinup.is_finite() && s.spinup >= 0.0) {
            errors.push(format!("sampling.spinup must be non-negative, got {}", s.spinup));
        }
        if s.count == 0 {
            errors.push("sampling.count must be at least 1".into());
        }
        if !(s.jitter.is_finite() && s.jitter >= 0.0) {
            errors.push(format!("sampling.jitter must be non-negative, got {}", s.jitter));
        }
        let x_init = match (&s.x_init, n) {
            (Some(x), Some(n)) if x.len() != n => {
                errors.push(format!("sampling.x_init has {} entries, model dimension is {n}", x.len()));
                None
            }
            (Some(x), _) => match StateVector::new(x.clone()) {
                Ok(v) => Some(v),
                Err(e) => {
                    errors.push(format!("sampling.x_init: {e}"));
                    None
                }
            },
            (None, Some(n)) => Some(StateVector::new(vec![1.0; n]).expect("finite")),
            (None, None) => None,
        };
        let p = &self.perturbation;
        positive(&mut errors, "perturbation.epsilon", p.epsilon);
        if p.directions_per_point == 0 {
            errors.push("perturbation.directions_per_point must be at least 1".into());
        }
        if self.output.formats.is_empty() {
            errors.push("output.formats must name at least one of csv, json".into());
        }

        let a = &self.analysis;
        let allowed = a.kind.allowed_keys();
        for key in a.present_keys() {
            if !allowed.contains(&key) {
                errors.push(format!("analysis.{key} does not apply to analysis kind `{}`", a.kind));
            }
        }
        let analysis = resolve_analysis(a, model.as_ref(), &mut errors);

        if !errors.is_empty() {
            return Err(ValidationErrors(errors));
        }
        Ok(Experiment {
            config: self.clone(),
            model: model.expect("validated"),
            x_init: x_init.expect("validated"),
            analysis: analysis.expect("validated"),
        })
    }
}

fn positive(errors: &mut Vec<String>, key: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        errors.push(format!("{key} must be positive, got {v}"));
    }
}

fn resolve_tau_grid(spec: &Option<TauGridSpec>, errors: &mut Vec<String>) -> Vec<f64> {
    let grid = match spec {
        None => geometric_then_linear(DEFAULT_TAU_START, DEFAULT_TAU_END, DEFAULT_TAU_POINTS)
            .expect("default grid"),
        Some(TauGridSpec::Explicit(v)) => v.clone(),
        Some(TauGridSpec::Range(r)) => match geometric_then_linear(r.start, r.end, r.points) {
            Ok(g) => g,
            Err(e) => {
                errors.push(format!("analysis.tau_grid: {e}"));
                return Vec::new();
            }
        },
    };
    let ok = !grid.is_empty()
        && grid.iter().all(|t| t.is_finite() && *t > 0.0)
        && grid.windows(2).all(|w| w[1] > w[0]);
    if !ok {
        errors.push("analysis.tau_grid must be a non-empty, strictly increasing list of positive values".into());
    }
    grid
}

fn resolve_saturation(a: &AnalysisSection, grid_len: usize, errors: &mut Vec<String>) -> SaturationParams {
    let d = SaturationParams::default();
    let params = SaturationParams {
        window: a.window.unwrap_or(d.window),
        slope_tol: a.slope_tol.unwrap_or(d.slope_tol),
        theta: a.theta.unwrap_or(d.theta),
    };
    if params.window == 0 {
        errors.push("analysis.window must be at least 1".into());
    } else if grid_len > 0 && grid_len < 2 * params.window {
        errors.push(format!(
            "analysis.tau_grid has {grid_len} points; window {} needs at least {}",
            params.window,
            2 * params.window
        ));
    }
    if !(params.slope_tol.is_finite() && params.slope_tol >= 0.0) {
        errors.push(format!("analysis.slope_tol must be non-negative, got {}", params.slope_tol));
    }
    if !(params.theta > 0.0 && params.theta < 1.0) {
        errors.push(format!("analysis.theta must lie in (0, 1), got {}", params.theta));
    }
    params
}

fn resolve_m(m: Option<usize>, n: Option<usize>, errors: &mut Vec<String>) -> usize {
    let Some(n) = n else { return m.unwrap_or(1) };
    let m = m.unwrap_or(n);
    if m == 0 || m > n {
        errors.push(format!("analysis.m must lie in 1..={n}, got {m}"));
    }
    m
}

fn resolve_analysis(a: &AnalysisSection, model: Option<&Model>, errors: &mut Vec<String>) -> Option<Analysis> {
    let n = model.map(Model::dimension);
    let analysis = match a.kind {
        AnalysisKind::Gle => {
            let total_time = a.total_time.unwrap_or(DEFAULT_GLE_TIME);
            let renorm_interval = a.renorm_interval.unwrap_or(nlle_core::tangent::DEFAULT_RENORM_INTERVAL);
            positive(errors, "analysis.total_time", total_time);
            positive(errors, "analysis.renorm_interval", renorm_interval);
            Analysis::Gle {
                total_time,
                renorm_interval,
                m: resolve_m(a.m, n, errors),
            }
        }
        AnalysisKind::Lle => {
            let tau = a.tau.unwrap_or(DEFAULT_LLE_TAU);
            positive(errors, "analysis.tau", tau);
            Analysis::Lle { tau }
        }
        AnalysisKind::Nlle | AnalysisKind::Localmap => {
            let tau_grid = resolve_tau_grid(&a.tau_grid, errors);
            let saturation = resolve_saturation(a, tau_grid.len(), errors);
            if a.kind == AnalysisKind::Nlle {
                Analysis::Nlle { tau_grid, saturation }
            } else {
                Analysis::Localmap { tau_grid, saturation }
            }
        }
        AnalysisKind::Spectrum => {
            let tau = a.tau.unwrap_or(DEFAULT_SPECTRUM_TAU);
            let renorm_interval = a.renorm_interval.unwrap_or(DEFAULT_SPECTRUM_RENORM);
            positive(errors, "analysis.tau", tau);
            positive(errors, "analysis.renorm_interval", renorm_interval);
            if tau.is_finite() && renorm_interval > 0.0 {
                let ratio = tau / renorm_interval;
                if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
                    errors.push(format!(
                        "analysis.tau ({tau}) must be a multiple of analysis.renorm_interval ({renorm_interval})"
                    ));
                }
            }
            Analysis::Spectrum {
                tau,
                renorm_interval,
                m: resolve_m(a.m, n, errors),
            }
        }
        AnalysisKind::FixedPoints => {
            let (lo, hi) = match (&a.bounds, n) {
                (None, Some(n)) => (vec![-2.0; n], vec![2.0; n]),
                (Some(BoxSpec::Uniform([l, h])), Some(n)) => (vec![*l; n], vec![*h; n]),
                (Some(BoxSpec::PerAxis(v)), Some(n)) if v.len() == n => {
                    (v.iter().map(|p| p[0]).collect(), v.iter().map(|p| p[1]).collect())
                }
                (Some(BoxSpec::PerAxis(v)), Some(n)) => {
                    errors.push(format!("analysis.box has {} axes, model dimension is {n}", v.len()));
                    (Vec::new(), Vec::new())
                }
                (_, None) => (Vec::new(), Vec::new()),
            };
            if lo.iter().zip(&hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l < h)) {
                errors.push("analysis.box must have finite bounds with lo < hi on every axis".into());
            }
            let grid_per_axis = a.grid_per_axis.unwrap_or(21);
            if grid_per_axis < 2 {
                errors.push(format!("analysis.grid_per_axis must be at least 2, got {grid_per_axis}"));
            }
            let newton_tol = a.newton_tol.unwrap_or(1e-12);
            positive(errors, "analysis.newton_tol", newton_tol);
            Analysis::FixedPoints {
                lo,
                hi,
                grid_per_axis,
                newton_tol,
            }
        }
        AnalysisKind::PesScan => {
            let parameter = match (&a.parameter, model) {
                (None, _) => {
                    errors.push("analysis.parameter is required for pes-scan".into());
                    String::new()
                }
                (Some(p), Some(m)) if !m.parameters().contains_key(p) => {
                    errors.push(format!("analysis.parameter `{p}` is not a parameter of model `{}`", m.name()));
                    p.clone()
                }
                (Some(p), _) => p.clone(),
            };
            let grid = a.lambda_grid.clone().unwrap_or_default();
            if grid.len() < 2 || !grid.windows(2).all(|w| w[1] > w[0]) || grid.iter().any(|g| !g.is_finite()) {
                errors.push("analysis.lambda_grid must hold at least 2 finite, increasing values".into());
            }
            let equilibrium = match (&a.equilibrium, n) {
                (Some(e), Some(n)) if e.len() != n => {
                    errors.push(format!("analysis.equilibrium has {} entries, model dimension is {n}", e.len()));
                    Vec::new()
                }
                (Some(e), _) => e.clone(),
                (None, Some(n)) => vec![0.0; n],
                (None, None) => Vec::new(),
            };
            Analysis::PesScan {
                parameter,
                grid,
                equilibrium,
            }
        }
        AnalysisKind::VerifyToy => {
            let lambda = match model {
                Some(Model::ToyBifurcation { lambda }) => *lambda,
                Some(m) => {
                    errors.push(format!("verify-toy requires model `toy-bifurcation`, got `{}`", m.name()));
                    f64::NAN
                }
                None => f64::NAN,
            };
            if lambda == 0.0 {
                errors.push("verify-toy needs lambda != 0 (lambda = 0 is the critical point)".into());
            }
            let n_basin = a.n_basin.unwrap_or(1000);
            if n_basin == 0 {
                errors.push("analysis.n_basin must be at least 1".into());
            }
            let horizon = a.horizon.unwrap_or(DEFAULT_TOY_HORIZON / lambda.abs());
            if lambda.is_finite() && lambda != 0.0 {
                positive(errors, "analysis.horizon", horizon);
            }
            Analysis::VerifyToy {
                lambda,
                n_basin,
                horizon,
            }
        }
    };
    Some(analysis)
}

pub const DEFAULT_GLE_TIME: f64 = 2000.0;
pub const DEFAULT_LLE_TAU: f64 = 0.5;
pub const DEFAULT_SPECTRUM_TAU: f64 = 100.0;
pub const DEFAULT_SPECTRUM_RENORM: f64 = 0.05;
/// The basin horizon defaults to this over `|lambda|`.
pub const DEFAULT_TOY_HORIZON: f64 = 50.0;

/// Analysis settings with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub enum Analysis {
    Gle {
        total_time: f64,
        renorm_interval: f64,
        m: usize,
    },
    Lle {
        tau: f64,
    },
    Nlle {
        tau_grid: Vec<f64>,
        saturation: SaturationParams,
    },
    Spectrum {
        tau: f64,
        renorm_interval: f64,
        m: usize,
    },
    Localmap {
        tau_grid: Vec<f64>,
        saturation: SaturationParams,
    },
    FixedPoints {
        lo: Vec<f64>,
        hi: Vec<f64>,
        grid_per_axis: usize,
        newton_tol: f64,
    },
    PesScan {
        parameter: String,
        grid: Vec<f64>,
        equilibrium: Vec<f64>,
    },
    VerifyToy {
        lambda: f64,
        n_basin: usize,
        horizon: f64,
    },
}

/// A validated config ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: Model,
    pub x_init: StateVector,
    pub analysis: Analysis,
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
name = "toy-bifurcation"
parameters = { lambda = 1.0 }

[analysis]
kind = "verify-toy"
n_basin = 100

[sampling]
seed = 7
"#;

    #[test]
    fn minimal_verify_toy() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let exp = cfg.validate().unwrap();
        assert_eq!(
            exp.analysis,
            Analysis::VerifyToy {
                lambda: 1.0,
                n_basin: 100,
                horizon: 50.0
            }
        );
        assert_eq!(cfg.perturbation_seed(), 7);
        assert_eq!(cfg.output.formats, vec![Format::Csv, Format::Json]);
    }

    #[test]
    fn unknown_keys_are_all_listed() {
        let text = MINIMAL.replace("[sampling]", "[perturbation]\nepsilonn = 1e-5\n\n[sampling]\ncuont = 3");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert_eq!(err.0.len(), 2, "{err}");
        assert!(err.0[0].contains("perturbation.epsilonn"), "{err}");
        assert!(err.0[1].contains("sampling.cuont"), "{err}");
    }

    #[test]
    fn keys_foreign_to_the_kind_are_rejected() {
        let text = MINIMAL.replace("n_basin = 100", "n_basin = 100\ntau = 2.0");
        let err = ExperimentConfig::from_toml(&text).unwrap().validate().unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert!(err.0[0].contains("analysis.tau"), "{err}");
    }

    #[test]
    fn every_value_error_is_reported() {
        let text = r#"
[model]
name = "lorenz63"
[integrator]
step = -0.01
[perturbation]
epsilon = 0.0
[analysis]
kind = "spectrum"
tau = 1.0
renorm_interval = 0.3
m = 4
"#;
        let err = ExperimentConfig::from_toml(text).unwrap().validate().unwrap_err();
        let all = err.to_string();
        for needle in ["integrator.step", "perturbation.epsilon", "multiple", "analysis.m"] {
            assert!(all.contains(needle), "{needle} missing from {all}");
        }
    }

    #[test]
    fn tau_grid_forms() {
        let base = "[model]\nname = \"lorenz63\"\n[analysis]\nkind = \"nlle\"\n";
        let exp = ExperimentConfig::from_toml(base).unwrap().validate().unwrap();
        match exp.analysis {
            Analysis::Nlle { tau_grid, .. } => assert_eq!(tau_grid.len(), 120),
            other => panic!("{other:?}"),
        }
        let text = format!("{base}tau_grid = {{ start = 0.1, end = 10.0, points = 30 }}\n");
        let exp = ExperimentConfig::from_toml(&text).unwrap().validate().unwrap();
        match exp.analysis {
            Analysis::Nlle { tau_grid, .. } => {
                assert_eq!(tau_grid.len(), 30);
                assert!((tau_grid[29] - 10.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let text = format!("{base}tau_grid = [0.5, 0.25]\nwindow = 1\n");
        assert!(ExperimentConfig::from_toml(&text).unwrap().validate().is_err());
    }

    #[test]
    fn model_errors_surface() {
        let text = "[model]\nname = \"lorenz63\"\nparameters = { rho = 28.0 }\n[analysis]\nkind = \"gle\"\n";
        let err = ExperimentConfig::from_toml(text).unwrap().validate().unwrap_err();
        assert!(err.0[0].starts_with("model:"), "{err}");
    }

    #[test]
    fn integer_model_parameters() {
        let text = "[model]\nname = \"lorenz96\"\nparameters = { n = 6, forcing = 8 }\n[analysis]\nkind = \"lle\"\n";
        let exp = ExperimentConfig::from_toml(text).unwrap().validate().unwrap();
        assert_eq!(exp.model.dimension(), 6);
    }

    #[test]
    fn seed_override() {
        let mut cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        cfg.perturbation.seed = Some(3);
        cfg.set_seed(11);
        assert_eq!((cfg.sampling.seed, cfg.perturbation_seed()), (11, 11));
    }
}

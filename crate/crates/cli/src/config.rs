//! Experiment configuration files (TOML).

use std::collections::BTreeMap;

use blowup_core::criterion::Mode;
use blowup_core::nonlinearity::ScalarFunction;
use blowup_core::spectral::{DomainGrid, Shape};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub domain: DomainSpec,
    pub psi: Option<FunctionSpec>,
    pub f: Option<FunctionSpec>,
    #[serde(default)]
    pub task: Tasks,
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(default = "default_shape")]
    pub shape: String,
    /// `[a, b]` or `[a, b, c, d]`.
    pub bounds: Option<Vec<f64>>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_shape() -> String {
    "interval".into()
}

fn default_resolution() -> usize {
    199
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec { shape: default_shape(), bounds: None, resolution: default_resolution() }
    }
}

impl DomainSpec {
    pub fn grid(&self) -> Result<DomainGrid, HarnessError> {
        let shape = match self.shape.as_str() {
            "interval" => {
                let b = self.bounds.clone().unwrap_or(vec![0.0, 1.0]);
                if b.len() != 2 {
                    return Err(HarnessError::config("domain.bounds", "an interval takes [a, b]"));
                }
                Shape::Interval { a: b[0], b: b[1] }
            }
            "rectangle" => {
                let b = self.bounds.clone().unwrap_or(vec![0.0, 1.0, 0.0, 1.0]);
                if b.len() != 4 {
                    return Err(HarnessError::config("domain.bounds", "a rectangle takes [a, b, c, d]"));
                }
                Shape::Rectangle { a: b[0], b: b[1], c: b[2], d: b[3] }
            }
            other => return Err(HarnessError::config("domain.shape", format!("unknown shape `{other}`"))),
        };
        DomainGrid::build(shape, self.resolution).map_err(|e| HarnessError::config("domain", e.to_string()))
    }
}

/// A reaction term or time weight: a builtin family with parameters, or an expression.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub family: Option<String>,
    pub expr: Option<String>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub coeff: Option<f64>,
    pub sigma: Option<f64>,
    pub k: Option<f64>,
    /// `k` as a multiple of the grid's principal eigenvalue.
    pub k_over_lambda0: Option<f64>,
    pub value: Option<f64>,
}

impl FunctionSpec {
    pub fn resolve(&self, path: &str, lambda0: f64) -> Result<ScalarFunction, HarnessError> {
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| HarnessError::config(format!("{path}.{key}"), "missing"));
        if let Some(text) = &self.expr {
            if self.family.as_deref().is_some_and(|f| f != "expression") {
                return Err(HarnessError::config(path, "give either `expr` or a builtin `family`, not both"));
            }
            return ScalarFunction::parse(text).map_err(|e| HarnessError::config(format!("{path}.expr"), e.to_string()));
        }
        let family = self.family.as_deref().ok_or_else(|| HarnessError::config(path, "needs `family` or `expr`"))?;
        Ok(match family {
            "power" => ScalarFunction::power(need(self.p, "p")?),
            "scaled-power" => ScalarFunction::scaled_power(need(self.coeff, "coeff")?, need(self.p, "p")?),
            "shifted-power-mix" => ScalarFunction::shifted_power_mix(need(self.p, "p")?, need(self.q, "q")?),
            "exp-minus-one" => ScalarFunction::exp_minus_one(),
            "time-weight" => {
                let k = match (self.k, self.k_over_lambda0) {
                    (Some(k), None) => k,
                    (None, Some(r)) => r * lambda0,
                    (None, None) => 0.0,
                    (Some(_), Some(_)) => {
                        return Err(HarnessError::config(path, "give `k` or `k_over_lambda0`, not both"));
                    }
                };
                ScalarFunction::time_weight(self.sigma.unwrap_or(0.0), k)
            }
            "constant" => ScalarFunction::constant(need(self.value, "value")?),
            other => return Err(HarnessError::config(format!("{path}.family"), format!("unknown family `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Tasks {
    pub analyze: Option<AnalyzeTask>,
    pub classify: Option<ClassifyTask>,
    pub simulate: Option<SimulateTask>,
    pub verify_properties: Option<VerifyTask>,
}

impl Tasks {
    pub fn is_empty(&self) -> bool {
        self.analyze.is_none() && self.classify.is_none() && self.simulate.is_none() && self.verify_properties.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeTask {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyTask {
    #[serde(default = "default_modes")]
    pub modes: Vec<String>,
    /// Initial data for the semigroup mode: `phi0` or `bump`.
    #[serde(default = "default_u0s")]
    pub u0: Vec<String>,
    pub eps: Option<Vec<f64>>,
    #[serde(default)]
    pub auxiliary: bool,
    /// End of the sampled heat trace.
    #[serde(default = "one")]
    pub trace_end: f64,
    /// Partial integrals up to `2^n` (default 20).
    pub horizon_doublings: Option<u32>,
}

impl Default for ClassifyTask {
    fn default() -> Self {
        ClassifyTask {
            modes: default_modes(),
            u0: default_u0s(),
            eps: None,
            auxiliary: false,
            trace_end: 1.0,
            horizon_doublings: None,
        }
    }
}

fn default_modes() -> Vec<String> {
    vec!["theorem-eps".into()]
}

fn default_u0s() -> Vec<String> {
    vec!["phi0".into()]
}

fn one() -> f64 {
    1.0
}

pub fn parse_mode(s: &str, path: &str) -> Result<Mode, HarnessError> {
    match s {
        "theorem-eps" => Ok(Mode::TheoremEps),
        "semigroup-norm" => Ok(Mode::SemigroupNorm),
        other => Err(HarnessError::config(path, format!("unknown mode `{other}` (theorem-eps | semigroup-norm)"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateTask {
    #[serde(default = "default_amplitudes")]
    pub amplitudes: Vec<f64>,
    #[serde(default = "default_u0")]
    pub u0: String,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Field snapshots written as plot data.
    #[serde(default)]
    pub snapshots: Vec<f64>,
    /// Run the downward amplitude search from 1.
    #[serde(default)]
    pub amplitude_search: bool,
    pub ode: Option<OdeSpec>,
    pub supersolution: Option<SupersolutionSpec>,
}

impl Default for SimulateTask {
    fn default() -> Self {
        SimulateTask {
            amplitudes: default_amplitudes(),
            u0: default_u0(),
            horizon: default_horizon(),
            snapshots: Vec::new(),
            amplitude_search: false,
            ode: None,
            supersolution: None,
        }
    }
}

fn default_amplitudes() -> Vec<f64> {
    vec![1.0]
}

fn default_u0() -> String {
    "phi0".into()
}

fn default_horizon() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSpec {
    pub y0: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupersolutionSpec {
    #[serde(default = "one")]
    pub eps: f64,
    /// Omitted: half the admissible bound.
    pub z0: Option<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Check a PDE run from `u0 = amplitude · φ0` against the supersolution.
    pub compare_amplitude: Option<f64>,
}

fn default_samples() -> usize {
    100
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyTask {
    /// Extra reaction terms (expressions); `[f]` is always included when present.
    #[serde(default)]
    pub f: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// `classify` or `simulate`.
    pub task: String,
    /// Dotted parameter paths (e.g. `psi.sigma`) and the values to take.
    pub params: BTreeMap<String, Vec<f64>>,
}

/// Parses a configuration and also returns the raw table, which sweeps rewrite.
pub fn parse_config(text: &str) -> Result<(Config, toml::Table), HarnessError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| HarnessError::config("<file>", e.to_string()))?;
    let cfg = from_table(&table)?;
    Ok((cfg, table))
}

pub fn from_table(table: &toml::Table) -> Result<Config, HarnessError> {
    let cfg: Config = toml::Value::Table(table.clone())
        .try_into()
        .map_err(|e: toml::de::Error| HarnessError::config("<file>", e.to_string()))?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &Config) -> Result<(), HarnessError> {
    if let Some(c) = &cfg.task.classify {
        for (i, m) in c.modes.iter().enumerate() {
            parse_mode(m, &format!("task.classify.modes[{i}]"))?;
        }
        for (i, u) in c.u0.iter().enumerate() {
            check_u0(u, &format!("task.classify.u0[{i}]"))?;
        }
        if let Some(e) = &c.eps {
            if e.is_empty() || e.iter().any(|x| !(*x > 0.0)) {
                return Err(HarnessError::config("task.classify.eps", "must be a nonempty list of positive numbers"));
            }
        }
        if c.horizon_doublings.is_some_and(|n| !(2..=60).contains(&n)) {
            return Err(HarnessError::config("task.classify.horizon_doublings", "must lie in 2..=60"));
        }
        if !(c.trace_end > 0.0) {
            return Err(HarnessError::config("task.classify.trace_end", "must be positive"));
        }
    }
    if let Some(s) = &cfg.task.simulate {
        check_u0(&s.u0, "task.simulate.u0")?;
        if !(s.horizon > 0.0) {
            return Err(HarnessError::config("task.simulate.horizon", "must be positive"));
        }
        if s.amplitudes.iter().any(|a| !(*a > 0.0)) {
            return Err(HarnessError::config("task.simulate.amplitudes", "must be positive"));
        }
    }
    let needs_f = cfg.task.analyze.is_some() || cfg.task.classify.is_some() || cfg.task.simulate.is_some();
    if needs_f && cfg.f.is_none() {
        return Err(HarnessError::config("f", "missing section"));
    }
    let needs_psi = cfg.task.classify.is_some() || cfg.task.simulate.is_some();
    if needs_psi && cfg.psi.is_none() {
        return Err(HarnessError::config("psi", "missing section"));
    }
    if let Some(sw) = &cfg.sweep {
        if sw.task != "classify" && sw.task != "simulate" {
            return Err(HarnessError::config("sweep.task", "must be `classify` or `simulate`"));
        }
        for (k, v) in &sw.params {
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                return Err(HarnessError::config(format!("sweep.params.{k}"), "values must be finite and nonempty"));
            }
        }
    }
    Ok(())
}

fn check_u0(s: &str, path: &str) -> Result<(), HarnessError> {
    match s {
        "phi0" | "bump" => Ok(()),
        other => Err(HarnessError::config(path, format!("unknown initial data `{other}` (phi0 | bump)"))),
    }
}

/// Sets the number at a dotted path; the path must already exist in the table.
/// An array-valued parameter becomes the one-element array `[value]`.
pub fn set_path(table: &mut toml::Table, path: &str, value: f64) -> Result<(), HarnessError> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().ok_or_else(|| HarnessError::config("sweep.params", "empty path"))?;
    let mut cur = table;
    for p in &parts {
        cur = cur
            .get_mut(*p)
            .and_then(|v| v.as_table_mut())
            .ok_or_else(|| HarnessError::config(format!("sweep.params.{path}"), format!("template has no table `{p}`")))?;
    }
    match cur.get_mut(last) {
        Some(v) => {
            *v = match v {
                toml::Value::Array(_) => toml::Value::Array(vec![toml::Value::Float(value)]),
                _ => toml::Value::Float(value),
            };
            Ok(())
        }
        None => Err(HarnessError::config(format!("sweep.params.{path}"), "template does not name this parameter")),
    }
}

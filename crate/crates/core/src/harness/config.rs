//! Experiment configuration files.
//!
//! A config is a TOML document:
//!
//! ```toml
//! name = "demo"            # used in output file names
//! seed = 7                 # initial tokens of trial k use stream k of this seed
//! p = 1.0                  # Lyapunov exponent p in (0, 1]
//! trials = 1
//! quantiles = [0.1, 0.9]   # band levels when trials >= 2
//!
//! [[model]]                # one or more (B, V) pairs
//! label = "main"
//! b = [[1.0, 0.0], [0.0, 1.0]]
//! v = [[1.0, 0.0], [0.0, 1.0]]
//! require_symmetric = true # false: allow non-symmetric VBᵀ (E-metrics where defined)
//!
//! [init]                   # kind = "uniform" | "vmf" | "explicit"
//! kind = "uniform"
//! n = 2
//! d = 2
//!
//! [sim]
//! betas = [1.0, "inf"]
//! dt = 0.01
//! t_final = 0.1
//! record_stride = 1
//! w2_stride = 10
//!
//! [metrics]                # all optional
//! alignment = true
//! w2 = true
//! v_p = true
//! energy = true
//! envelopes = false
//! c0 = 1.0
//! c1 = 2.0
//!
//! [output]                 # all optional
//! snapshot_times = [0.0, 0.1]
//! workers = 1
//! ```
//!
//! `vmf` init takes `n` and `components = [{ mean = [...], kappa = 2.0, weight = 0.5 }, ...]`;
//! `explicit` init takes `points = [[...], ...]` of unit vectors.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::bounds::BoundParams;
use crate::dynamics::{Beta, Ensemble, SimConfig, UNIT_TOL};
use crate::linalg::{norm, Matrix};
use crate::metrics::MetricToggles;
use crate::sphere::{SeededRng, VmfComponent, VmfMixture};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default = "one_usize")]
    pub trials: usize,
    #[serde(default = "default_quantiles")]
    pub quantiles: [f64; 2],
    /// Free-form provenance, e.g. which random draws a preset settled on.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
    #[serde(rename = "model")]
    pub models: Vec<ModelSpec>,
    pub init: InitSpec,
    pub sim: SimSpec,
    #[serde(default)]
    pub metrics: MetricsSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub label: String,
    pub b: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    #[serde(default = "yes")]
    pub require_symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitSpec {
    Uniform { n: usize, d: usize },
    Vmf { n: usize, components: Vec<VmfComponent> },
    Explicit { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub betas: Vec<Beta>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "one_usize")]
    pub record_stride: usize,
    #[serde(default = "default_w2_stride")]
    pub w2_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSpec {
    pub alignment: bool,
    pub w2: bool,
    pub v_p: bool,
    pub energy: bool,
    /// Append theoretical envelope columns.
    pub envelopes: bool,
    pub c0: f64,
    pub c1: f64,
}

impl Default for MetricsSpec {
    fn default() -> Self {
        Self {
            alignment: true,
            w2: true,
            v_p: true,
            energy: true,
            envelopes: false,
            c0: BoundParams::DEFAULT_C0,
            c1: BoundParams::DEFAULT_C1,
        }
    }
}

impl MetricsSpec {
    pub fn toggles(&self) -> MetricToggles {
        MetricToggles { alignment: self.alignment, w2: self.w2, v_p: self.v_p, energy: self.energy }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub snapshot_times: Vec<f64>,
    /// Thread count; not written back, since it cannot change any output.
    #[serde(skip_serializing)]
    pub workers: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { snapshot_times: Vec::new(), workers: 1 }
    }
}

fn default_name() -> String {
    "experiment".into()
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_quantiles() -> [f64; 2] {
    [0.1, 0.9]
}
fn default_dt() -> f64 {
    0.01
}
fn default_w2_stride() -> usize {
    10
}

/// Command-line overrides applied on top of a preset or config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub dt: Option<f64>,
    pub betas: Option<Vec<Beta>>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(workers) = self.workers {
            cfg.output.workers = workers;
        }
        if let Some(dt) = self.dt {
            cfg.sim.dt = dt;
        }
        if let Some(betas) = &self.betas {
            cfg.sim.betas = betas.clone();
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Parse { origin: origin.to_string(), message: e.to_string() })
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment configs always serialize")
    }

    /// Single-line JSON, embedded in CSV headers.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("experiment configs always serialize")
    }

    /// Dimension implied by the init block, if it is well-formed enough to say.
    pub fn init_dim(&self) -> Option<usize> {
        match &self.init {
            InitSpec::Uniform { d, .. } => Some(*d),
            InitSpec::Vmf { components, .. } => components.first().map(|c| c.mean.len()),
            InitSpec::Explicit { points } => points.first().map(Vec::len),
        }
    }

    pub fn num_tokens(&self) -> usize {
        match &self.init {
            InitSpec::Uniform { n, .. } | InitSpec::Vmf { n, .. } => *n,
            InitSpec::Explicit { points } => points.len(),
        }
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut errs = Vec::new();
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            errs.push(format!("name: '{}' must be non-empty and use only [A-Za-z0-9._-]", self.name));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            errs.push(format!("p: {} is outside (0, 1]", self.p));
        }
        if self.trials == 0 {
            errs.push("trials: must be at least 1".into());
        }
        let [lo, hi] = self.quantiles;
        if !(lo > 0.0 && lo < hi && hi < 1.0) {
            errs.push(format!("quantiles: [{lo}, {hi}] must satisfy 0 < lo < hi < 1"));
        }

        let d = self.init_dim();
        self.validate_init(&mut errs);
        if self.models.is_empty() {
            errs.push("model: at least one [[model]] table is required".into());
        }
        let mut labels = std::collections::BTreeSet::new();
        for (k, m) in self.models.iter().enumerate() {
            if m.label.is_empty() || !m.label.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                errs.push(format!("model[{k}].label: '{}' must be non-empty and use only [A-Za-z0-9._-]", m.label));
            }
            if !labels.insert(m.label.as_str()) {
                errs.push(format!("model[{k}].label: duplicate label '{}'", m.label));
            }
            for (field, rows) in [("b", &m.b), ("v", &m.v)] {
                check_matrix(&format!("model[{k}].{field}"), rows, d, &mut errs);
            }
        }

        if self.sim.betas.is_empty() {
            errs.push("sim.betas: at least one inverse temperature is required".into());
        }
        let mut seen = Vec::new();
        for (k, b) in self.sim.betas.iter().enumerate() {
            if let Beta::Finite(x) = b {
                if !(*x > 0.0) || !x.is_finite() {
                    errs.push(format!("sim.betas[{k}]: {x} must be positive (use \"inf\" for zero temperature)"));
                }
            }
            if seen.contains(&b.to_string()) {
                errs.push(format!("sim.betas[{k}]: duplicate value {b}"));
            }
            seen.push(b.to_string());
        }
        let probe = SimConfig { beta: Beta::Infinite, ..self.sim_config(Beta::Infinite) };
        if let Err(e) = probe.validate() {
            errs.push(format!("sim: {e}"));
        }
        if self.sim.w2_stride == 0 {
            errs.push("sim.w2_stride: must be positive".into());
        }
        for (k, t) in self.output.snapshot_times.iter().enumerate() {
            if !(*t >= 0.0 && *t <= self.sim.t_final) {
                errs.push(format!("output.snapshot_times[{k}]: {t} is outside [0, t_final]"));
            }
        }
        if self.output.workers == 0 {
            errs.push("output.workers: must be at least 1".into());
        }
        if self.metrics.envelopes && !(self.metrics.c0 > 0.0 && self.metrics.c1 > self.metrics.c0) {
            errs.push(format!("metrics: envelope constants need c1 > c0 > 0 (got c0={}, c1={})", self.metrics.c0, self.metrics.c1));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Validation(errs))
        }
    }

    fn validate_init(&self, errs: &mut Vec<String>) {
        match &self.init {
            InitSpec::Uniform { n, d } => {
                if *n == 0 {
                    errs.push("init.n: must be at least 1".into());
                }
                if *d < 2 {
                    errs.push(format!("init.d: {d} must be at least 2"));
                }
            }
            InitSpec::Vmf { n, components } => {
                if *n == 0 {
                    errs.push("init.n: must be at least 1".into());
                }
                if let Err(e) = VmfMixture::new(components.clone()) {
                    errs.push(format!("init.components: {e}"));
                }
            }
            InitSpec::Explicit { points } => {
                if points.is_empty() {
                    errs.push("init.points: at least one point is required".into());
                }
                let d = points.first().map_or(0, Vec::len);
                if d < 2 && !points.is_empty() {
                    errs.push("init.points: points need dimension >= 2".into());
                }
                for (i, p) in points.iter().enumerate() {
                    if p.len() != d {
                        errs.push(format!("init.points[{i}]: length {} differs from {d}", p.len()));
                    } else if !((norm(p) - 1.0).abs() <= UNIT_TOL) {
                        errs.push(format!("init.points[{i}]: norm {} is not 1", norm(p)));
                    }
                }
            }
        }
    }

    /// Simulation settings for one inverse temperature.
    pub fn sim_config(&self, beta: Beta) -> SimConfig {
        SimConfig {
            beta,
            dt: self.sim.dt,
            t_final: self.sim.t_final,
            record_stride: self.sim.record_stride,
            seed: self.seed,
        }
    }

    /// Initial ensemble of trial `trial`; identical across models and β.
    pub fn initial_ensemble(&self, trial: usize) -> Result<Ensemble, HarnessError> {
        let mut rng = SeededRng::with_stream(self.seed, trial as u64);
        Ok(match &self.init {
            InitSpec::Uniform { n, d } => Ensemble::sample_uniform(*n, *d, &mut rng),
            InitSpec::Vmf { n, components } => {
                let mix = VmfMixture::new(components.clone()).map_err(|e| HarnessError::Validation(vec![format!("init.components: {e}")]))?;
                Ensemble::sample_vmf(*n, &mix, &mut rng)
            }
            InitSpec::Explicit { points } => {
                let d = points[0].len();
                Ensemble::from_points(d, points).map_err(|e| HarnessError::Validation(vec![format!("init.points: {e}")]))?
            }
        })
    }
}

impl ModelSpec {
    pub fn new(label: &str, b: &Matrix, v: &Matrix) -> Self {
        Self { label: label.to_string(), b: b.clone().into(), v: v.clone().into(), require_symmetric: true }
    }

    pub fn matrices(&self) -> Result<(Matrix, Matrix), HarnessError> {
        let conv = |field: &str, rows: &Vec<Vec<f64>>| {
            Matrix::try_from(rows.clone()).map_err(|e| HarnessError::Validation(vec![format!("model '{}'.{field}: {e}", self.label)]))
        };
        Ok((conv("b", &self.b)?, conv("v", &self.v)?))
    }
}

fn check_matrix(field: &str, rows: &[Vec<f64>], d: Option<usize>, errs: &mut Vec<String>) {
    if rows.is_empty() {
        errs.push(format!("{field}: matrix is empty"));
        return;
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != rows.len() {
            errs.push(format!("{field}: not square (row {i} has {} entries, expected {})", r.len(), rows.len()));
        }
        if r.iter().any(|x| !x.is_finite()) {
            errs.push(format!("{field}: row {i} has non-finite entries"));
        }
    }
    if let Some(d) = d {
        if rows.len() != d {
            errs.push(format!("{field}: dimension {} does not match the token dimension {d}", rows.len()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        name = "minimal"
        [[model]]
        label = "id"
        b = [[1.0, 0.0], [0.0, 1.0]]
        v = [[1.0, 0.0], [0.0, 1.0]]
        [init]
        kind = "uniform"
        n = 2
        d = 2
        [sim]
        betas = [1.0, "inf"]
        t_final = 0.1
    "#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL, "inline").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.sim.betas, vec![Beta::Finite(1.0), Beta::Infinite]);
        assert_eq!((cfg.sim.dt, cfg.sim.record_stride, cfg.sim.w2_stride, cfg.trials), (0.01, 1, 10, 1));
        assert_eq!(cfg.output.workers, 1);
        assert!(cfg.models[0].require_symmetric);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL, "inline").unwrap();
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string(), "dump").unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn parse_errors_carry_location() {
        let bad = MINIMAL.replace("t_final = 0.1", "t_final = \"soon\"");
        let err = ExperimentConfig::from_toml_str(&bad, "inline").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line") && msg.contains("t_final"), "{msg}");
        assert_eq!(err.exit_code(), 1);
        let unknown = MINIMAL.replace("t_final = 0.1", "t_final = 0.1\ntfinal = 2");
        assert!(ExperimentConfig::from_toml_str(&unknown, "inline").unwrap_err().to_string().contains("tfinal"));
    }

    #[test]
    fn validation_lists_every_violation() {
        let bad = MINIMAL
            .replace("b = [[1.0, 0.0], [0.0, 1.0]]", "b = [[1.0, 0.0, 0.0], [0.0, 1.0]]")
            .replace("betas = [1.0, \"inf\"]", "betas = [0.0]")
            .replace("name = \"minimal\"", "name = \"minimal\"\ntrials = 0");
        let cfg = ExperimentConfig::from_toml_str(&bad, "inline").unwrap();
        match cfg.validate() {
            Err(HarnessError::Validation(errs)) => {
                assert!(errs.iter().any(|e| e.starts_with("model[0].b: not square")), "{errs:?}");
                assert!(errs.iter().any(|e| e.starts_with("sim.betas[0]")), "{errs:?}");
                assert!(errs.iter().any(|e| e.starts_with("trials")), "{errs:?}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let bad = MINIMAL.replace("d = 2", "d = 3");
        let cfg = ExperimentConfig::from_toml_str(&bad, "inline").unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("model[0].b: dimension 2 does not match the token dimension 3"), "{err}");
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = ExperimentConfig::from_toml_str(MINIMAL, "inline").unwrap();
        Overrides { seed: Some(9), workers: Some(3), dt: Some(0.02), betas: Some(vec![Beta::Infinite]) }.apply(&mut cfg);
        assert_eq!((cfg.seed, cfg.output.workers, cfg.sim.dt), (9, 3, 0.02));
        assert_eq!(cfg.sim.betas, vec![Beta::Infinite]);
    }

    #[test]
    fn initial_ensembles_depend_on_seed_and_trial_only() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL, "inline").unwrap();
        assert_eq!(cfg.initial_ensemble(1).unwrap(), cfg.initial_ensemble(1).unwrap());
        assert_ne!(cfg.initial_ensemble(0).unwrap(), cfg.initial_ensemble(1).unwrap());
    }
}

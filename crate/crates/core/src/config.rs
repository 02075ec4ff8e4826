//! Experiment files: TOML parsing, defaults, validation and the built-in presets.
//!
//! A config is read into a loose form where every field is optional, then
//! resolved into a [`RunConfig`] with all values explicit. Each default that
//! had to be filled in is recorded, and [`RunConfig::to_toml`] writes the
//! resolved form back out so an echo reproduces the run on its own.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{LyapunovSettings, VerdictThresholds};
use crate::hybrid::{HybridModel, HybridState, ModelError, ModelParams};
use crate::integrator::{builtin_schemes, IntegratorConfig};
use crate::pauli::{Amplitudes, ModelKind};

/// Overrides `output.root` when set.
pub const OUT_DIR_ENV: &str = "HYBRID_ORBITS_OUT_DIR";

/// Explicit amplitudes must have unit norm to this tolerance.
pub const NORM_TOL: f64 = 1e-9;

pub const DEFAULT_HORIZON: f64 = 2000.0;
pub const DEFAULT_SAMPLE_EVERY: usize = 10;
pub const DEFAULT_OUTPUT_ROOT: &str = "output";
pub const DEFAULT_Q0: f64 = 1.0;

pub const PRESETS: [(&str, &str); 3] = [
    ("fig1-symmetric", include_str!("../../../presets/fig1-symmetric.toml")),
    ("fig1-nonsymmetric2", include_str!("../../../presets/fig1-nonsymmetric2.toml")),
    ("fig3-nonsymmetric1", include_str!("../../../presets/fig3-nonsymmetric1.toml")),
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("no preset named `{0}` (try `presets list`)")]
    UnknownPreset(String),
}

impl ConfigError {
    fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid { key: key.into(), message: message.into() }
    }

    /// The config key an invalid value was found under, if known.
    pub fn key(&self) -> Option<&str> {
        match self {
            Self::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

// Loose on-disk form.

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    initial: RawInitial,
    #[serde(default)]
    integrator: IntegratorConfig,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    diagnostics: DiagnosticsConfig,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: Option<ModelKind>,
    omega: Option<f64>,
    mu: Option<f64>,
    beta: Option<f64>,
    m: Option<f64>,
    k: Option<f64>,
    c1: Option<f64>,
    c2: Option<f64>,
    hbar: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitudes_re: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitudes_im: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    q: Option<f64>,
    p: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    horizon: Option<f64>,
    sample_every: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    root: Option<PathBuf>,
}

/// Which diagnostics to compute and how to judge them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub spectra: bool,
    pub lyapunov: bool,
    pub thresholds: VerdictThresholds,
    pub benettin: LyapunovSettings,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self { spectra: true, lyapunov: true, thresholds: VerdictThresholds::default(), benettin: LyapunovSettings::default() }
    }
}

/// Named initial quantum states.
pub const NAMED_STATES: [&str; 5] = ["equal-superposition", "up-up", "up-down", "down-up", "down-down"];

pub fn named_state(name: &str) -> Option<Amplitudes> {
    Some(match name {
        "equal-superposition" => Amplitudes::from_real([0.5; 4]),
        "up-up" => Amplitudes::basis(0),
        "up-down" => Amplitudes::basis(1),
        "down-up" => Amplitudes::basis(2),
        "down-down" => Amplitudes::basis(3),
        _ => return None,
    })
}

/// How the initial quantum amplitudes are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumSpec {
    Named(String),
    Explicit(Amplitudes),
    /// Standard-normal real and imaginary parts from ChaCha8, then normalised.
    Random { seed: u64 },
}

impl QuantumSpec {
    pub fn amplitudes(&self) -> Amplitudes {
        match self {
            Self::Named(name) => named_state(name).expect("validated on load"),
            Self::Explicit(a) => *a,
            Self::Random { seed } => random_amplitudes(*seed),
        }
    }
}

pub fn random_amplitudes(seed: u64) -> Amplitudes {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let a = Amplitudes::new(std::array::from_fn(|_| {
            C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        }));
        if let Some(a) = a.normalized() {
            return a;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialCondition {
    pub quantum: QuantumSpec,
    pub q: f64,
    pub p: f64,
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub model: ModelParams,
    pub initial: InitialCondition,
    pub integrator: IntegratorConfig,
    pub horizon: f64,
    pub sample_every: usize,
    pub diagnostics: DiagnosticsConfig,
    /// Parent of the run directory; see [`RunConfig::output_dir`].
    pub output_root: PathBuf,
    /// `key = value` for every value that was filled in by default.
    pub defaults: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunConfig {
    pub fn from_toml(text: &str, name: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { origin: name.to_string(), message: e.message().to_string() })?;
        resolve(raw, name)
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| ConfigError::UnknownPreset(name.into()))?;
        Self::from_toml(text, name)
    }

    pub fn build_model(&self) -> HybridModel {
        HybridModel::new(self.model).expect("validated on load")
    }

    pub fn initial_state(&self) -> HybridState {
        HybridState::from_amplitudes(&self.initial.quantum.amplitudes(), self.initial.q, self.initial.p, self.model.hbar)
    }

    /// `output_root/name`, with the root replaced by `$HYBRID_ORBITS_OUT_DIR`
    /// when that is set.
    pub fn output_dir(&self) -> PathBuf {
        let root = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| self.output_root.clone());
        root.join(&self.name)
    }

    /// The resolved config as TOML, with every value explicit.
    pub fn to_toml(&self) -> String {
        let (state, amplitudes_re, amplitudes_im, seed) = match &self.initial.quantum {
            QuantumSpec::Named(n) => (Some(n.clone()), None, None, None),
            QuantumSpec::Explicit(a) => {
                (None, Some(a.0.iter().map(|c| c.re).collect()), Some(a.0.iter().map(|c| c.im).collect()), None)
            }
            QuantumSpec::Random { seed } => (None, None, None, Some(*seed)),
        };
        let m = &self.model;
        let raw = RawConfig {
            name: Some(self.name.clone()),
            model: RawModel {
                kind: Some(m.kind),
                omega: Some(m.omega),
                mu: Some(m.mu),
                beta: Some(m.beta),
                m: Some(m.mass),
                k: Some(m.stiffness),
                c1: Some(m.c1),
                c2: Some(m.c2),
                hbar: Some(m.hbar),
            },
            initial: RawInitial { state, amplitudes_re, amplitudes_im, seed, q: Some(self.initial.q), p: Some(self.initial.p) },
            integrator: self.integrator.clone(),
            run: RawRun { horizon: Some(self.horizon), sample_every: Some(self.sample_every) },
            diagnostics: self.diagnostics.clone(),
            output: RawOutput { root: Some(self.output_root.clone()) },
        };
        toml::to_string(&raw).expect("config serialises")
    }

    /// Sets a model parameter by the name used in config files (`m`, `k`,
    /// `mu`, ...) and revalidates.
    pub fn set_parameter(&mut self, axis: &str, value: f64) -> Result<(), ConfigError> {
        let mut model = self.model;
        model.set(axis, value).map_err(|e| ConfigError::invalid(format!("model.{axis}"), e.to_string()))?;
        model.validate().map_err(model_error)?;
        self.model = model;
        Ok(())
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    RunConfig::from_toml(&text, stem).map_err(|e| match e {
        ConfigError::Parse { message, .. } => ConfigError::Parse { origin: path.display().to_string(), message },
        other => other,
    })
}

/// A config file path, or the name of a built-in preset.
pub fn load_config_or_preset(spec: &str) -> Result<RunConfig, ConfigError> {
    if Path::new(spec).exists() {
        load_config(spec)
    } else if PRESETS.iter().any(|(n, _)| *n == spec) {
        RunConfig::preset(spec)
    } else {
        load_config(spec)
    }
}

/// Config key for a model parameter name.
fn model_key(name: &str) -> &str {
    match name {
        "mass" => "m",
        "stiffness" => "k",
        other => other,
    }
}

fn model_error(e: ModelError) -> ConfigError {
    match e {
        ModelError::NonPositive { name, value } => {
            ConfigError::invalid(format!("model.{}", model_key(name)), format!("must be strictly positive (got {value})"))
        }
        ModelError::NonFinite { name, value } => {
            ConfigError::invalid(format!("model.{}", model_key(name)), format!("must be finite (got {value})"))
        }
        ModelError::UnknownParameter(name) => ConfigError::invalid(format!("model.{name}"), "unknown parameter"),
    }
}

fn resolve(raw: RawConfig, fallback_name: &str) -> Result<RunConfig, ConfigError> {
    let mut defaults = Vec::new();
    let mut warnings = Vec::new();

    let name = raw.name.unwrap_or_else(|| fallback_name.to_string());
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(ConfigError::invalid("name", format!("must be a plain, non-empty name (got {name:?})")));
    }

    let fig = ModelParams::figure(ModelKind::Symmetric);
    let mut pick = |key: &str, value: Option<f64>, default: f64| -> f64 {
        value.unwrap_or_else(|| {
            defaults.push(format!("model.{key} = {default}"));
            default
        })
    };
    let kind = raw.model.kind.ok_or_else(|| ConfigError::invalid("model.kind", "required (symmetric, nonsymmetric1 or nonsymmetric2)"))?;
    let model = ModelParams {
        kind,
        omega: pick("omega", raw.model.omega, fig.omega),
        mu: pick("mu", raw.model.mu, fig.mu),
        beta: pick("beta", raw.model.beta, fig.beta),
        mass: pick("m", raw.model.m, fig.mass),
        stiffness: pick("k", raw.model.k, fig.stiffness),
        c1: pick("c1", raw.model.c1, fig.c1),
        c2: pick("c2", raw.model.c2, fig.c2),
        hbar: pick("hbar", raw.model.hbar, fig.hbar),
    };
    if kind == ModelKind::NonSymmetric1 && raw.model.beta.is_none() {
        warnings.push(format!("model.beta not given for {}; using {}", kind.name(), fig.beta));
    }
    model.validate().map_err(model_error)?;

    let initial = resolve_initial(&raw.initial, &mut defaults)?;

    let integrator = raw.integrator;
    integrator.validate().map_err(|e| ConfigError::invalid("integrator", e.to_string()))?;
    if builtin_schemes().get(&integrator.scheme).is_err() {
        return Err(ConfigError::invalid(
            "integrator.scheme",
            format!("unknown scheme `{}` (known: {})", integrator.scheme, builtin_schemes().names().join(", ")),
        ));
    }

    let horizon = raw.run.horizon.unwrap_or_else(|| {
        defaults.push(format!("run.horizon = {DEFAULT_HORIZON}"));
        DEFAULT_HORIZON
    });
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ConfigError::invalid("run.horizon", format!("must be positive (got {horizon})")));
    }
    if horizon < integrator.dt {
        return Err(ConfigError::invalid("run.horizon", format!("shorter than one step of {}", integrator.dt)));
    }
    let sample_every = raw.run.sample_every.unwrap_or_else(|| {
        defaults.push(format!("run.sample_every = {DEFAULT_SAMPLE_EVERY}"));
        DEFAULT_SAMPLE_EVERY
    });
    if sample_every == 0 {
        return Err(ConfigError::invalid("run.sample_every", "must be at least 1"));
    }

    let diagnostics = raw.diagnostics;
    if diagnostics.lyapunov {
        diagnostics.benettin.validate().map_err(|e| ConfigError::invalid("diagnostics.benettin", e.to_string()))?;
    }

    let output_root = raw.output.root.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));

    Ok(RunConfig {
        name,
        model,
        initial,
        integrator,
        horizon,
        sample_every,
        diagnostics,
        output_root,
        defaults,
        warnings,
    })
}

fn resolve_initial(raw: &RawInitial, defaults: &mut Vec<String>) -> Result<InitialCondition, ConfigError> {
    let explicit = raw.amplitudes_re.is_some() || raw.amplitudes_im.is_some();
    let given = [raw.state.is_some(), explicit, raw.seed.is_some()].iter().filter(|&&b| b).count();
    if given > 1 {
        return Err(ConfigError::invalid("initial", "give only one of `state`, `amplitudes_re`/`amplitudes_im` or `seed`"));
    }
    let quantum = if let Some(name) = &raw.state {
        if named_state(name).is_none() {
            return Err(ConfigError::invalid("initial.state", format!("unknown state `{name}` (known: {})", NAMED_STATES.join(", "))));
        }
        QuantumSpec::Named(name.clone())
    } else if explicit {
        let part = |key: &str, v: &Option<Vec<f64>>| -> Result<[f64; 4], ConfigError> {
            let v = v.clone().unwrap_or_else(|| vec![0.0; 4]);
            let arr: [f64; 4] = v
                .as_slice()
                .try_into()
                .map_err(|_| ConfigError::invalid(format!("initial.{key}"), format!("needs 4 entries (got {})", v.len())))?;
            if arr.iter().any(|x| !x.is_finite()) {
                return Err(ConfigError::invalid(format!("initial.{key}"), "entries must be finite"));
            }
            Ok(arr)
        };
        let re = part("amplitudes_re", &raw.amplitudes_re)?;
        let im = part("amplitudes_im", &raw.amplitudes_im)?;
        let a = Amplitudes::new(std::array::from_fn(|n| C64::new(re[n], im[n])));
        let norm = a.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(ConfigError::invalid("initial.amplitudes_re", format!("amplitudes must have unit norm (Σ|c|² = {norm})")));
        }
        QuantumSpec::Explicit(a)
    } else if let Some(seed) = raw.seed {
        QuantumSpec::Random { seed }
    } else {
        defaults.push("initial.state = \"equal-superposition\"".into());
        QuantumSpec::Named("equal-superposition".into())
    };
    let q = raw.q.unwrap_or_else(|| {
        defaults.push(format!("initial.q = {DEFAULT_Q0}"));
        DEFAULT_Q0
    });
    let p = raw.p.unwrap_or_else(|| {
        defaults.push("initial.p = 0".into());
        0.0
    });
    for (key, v) in [("initial.q", q), ("initial.p", p)] {
        if !v.is_finite() {
            return Err(ConfigError::invalid(key, "must be finite"));
        }
    }
    Ok(InitialCondition { quantum, q, p })
}

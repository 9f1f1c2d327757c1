//! Experiment configuration: schema, loading, validation and mapping onto the engine.
//!
//! The file is TOML; a file whose first non-blank character is `{` is read as
//! JSON with the same schema. Unknown keys are rejected everywhere.

use std::collections::BTreeSet;
use std::path::Path;

use qresponse::dynamics::{DriveProtocol, Waveform};
use qresponse::model::{build_qubit, build_transverse_ising_with, Boundary, SystemSpec, TimeParity};
use qresponse::{Matrix, Operator, C64, FTag};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub protocol: Option<ProtocolConfig>,
    #[serde(default)]
    pub tasks: Vec<TaskConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    /// `(ω₀/2)σᶻ` with a `σˣ` source.
    Qubit {
        #[serde(default = "one")]
        omega0: f64,
        /// Adds a `σᶻ` source named `z` with this parity.
        #[serde(default)]
        z_source: bool,
    },
    /// Transverse-field Ising chain with `x{i}` and `z{i}` sources.
    Ising {
        sites: usize,
        #[serde(default = "one")]
        coupling: f64,
        #[serde(default)]
        field: f64,
        #[serde(default)]
        periodic: bool,
        /// Optional per-source parities, in source order.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        parity: Option<Vec<i8>>,
    },
    /// Explicit matrices.
    Inline {
        h0: MatrixInput,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        number: Option<MatrixInput>,
        sources: Vec<InlineSource>,
    },
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig::Qubit { omega0: 1.0, z_source: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSource {
    pub label: String,
    pub phi: MatrixInput,
    #[serde(default)]
    pub j0: f64,
    #[serde(default = "even")]
    pub parity: i8,
}

/// A real matrix as nested rows, or separate real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixInput {
    Real(Vec<Vec<f64>>),
    Complex { re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default)]
    pub mu: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { beta: 1.0, mu: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub t_i: f64,
    pub t_f: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Sources not listed stay at their initial value.
    #[serde(default)]
    pub sources: Vec<SourceDrive>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceDrive {
    pub source: String,
    pub waveform: WaveformConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WaveformConfig {
    Constant { value: f64 },
    Step { at: f64, before: f64, after: f64 },
    Ramp { from: f64, to: f64 },
    Gaussian { base: f64, amp: f64, center: f64, width: f64 },
    Sinusoid { base: f64, amp: f64, omega: f64, phase: f64 },
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

impl WaveformConfig {
    fn to_waveform(&self) -> Waveform {
        match self.clone() {
            WaveformConfig::Constant { value } => Waveform::Constant(value),
            WaveformConfig::Step { at, before, after } => Waveform::Step { at, before, after },
            WaveformConfig::Ramp { from, to } => Waveform::Ramp { from, to },
            WaveformConfig::Gaussian { base, amp, center, width } => Waveform::Gaussian { base, amp, center, width },
            WaveformConfig::Sinusoid { base, amp, omega, phase } => Waveform::Sinusoid { base, amp, omega, phase },
            WaveformConfig::Tabulated { times, values } => Waveform::Tabulated { times, values },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default)]
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir(), format: Format::Csv }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// One task and its options. `label` names the output file (default: the task name).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskConfig {
    StaticSusc {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Spectrum {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default)]
        m: usize,
        #[serde(default)]
        n: usize,
        #[serde(default = "bkm")]
        f: String,
    },
    FdrCheck {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        /// Function tags; empty means the whole whitelist.
        #[serde(default)]
        f: Vec<String>,
        #[serde(default)]
        m: usize,
        #[serde(default)]
        n: usize,
    },
    Respond {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default)]
        m: usize,
        #[serde(default)]
        n: usize,
        #[serde(default = "ten")]
        t_max: f64,
        #[serde(default = "default_points")]
        points: usize,
    },
    VolterraCheck {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default = "default_orders")]
        orders: Vec<usize>,
        #[serde(default = "default_amplitudes")]
        amplitudes: Vec<f64>,
    },
    WorkStats {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        /// Also run the reversed protocol and compare (needs source parities).
        #[serde(default)]
        crooks: bool,
    },
    Kk {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default)]
        model: KkModel,
        #[serde(default = "twenty")]
        half_width: f64,
        #[serde(default = "kk_points")]
        points: usize,
    },
    ReferenceModels {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default = "one")]
        r: f64,
        #[serde(default = "one")]
        c: f64,
        #[serde(default = "one")]
        omega0: f64,
        #[serde(default = "default_zeta")]
        zeta: f64,
        #[serde(default = "ten")]
        t_max: f64,
        #[serde(default = "ten")]
        omega_max: f64,
        #[serde(default = "default_points")]
        points: usize,
    },
    FluidCurrent {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default = "half")]
        d: f64,
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default = "default_points")]
        points: usize,
        /// Random sample points from this seed; a fixed lattice without it.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

/// Input to the `kk` task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KkModel {
    Lorentzian {
        #[serde(default)]
        omega0: f64,
        #[serde(default = "one")]
        gamma: f64,
    },
    Rc { r: f64, c: f64 },
    Oscillator { omega0: f64, zeta: f64 },
    /// Broadened delayed linear response of the configured system.
    Response {
        #[serde(default)]
        m: usize,
        #[serde(default)]
        n: usize,
        #[serde(default = "half")]
        eta: f64,
    },
}

impl Default for KkModel {
    fn default() -> Self {
        KkModel::Lorentzian { omega0: 0.0, gamma: 1.0 }
    }
}

impl TaskConfig {
    pub fn name(&self) -> &'static str {
        match self {
            TaskConfig::StaticSusc { .. } => "static-susc",
            TaskConfig::Spectrum { .. } => "spectrum",
            TaskConfig::FdrCheck { .. } => "fdr-check",
            TaskConfig::Respond { .. } => "respond",
            TaskConfig::VolterraCheck { .. } => "volterra-check",
            TaskConfig::WorkStats { .. } => "work-stats",
            TaskConfig::Kk { .. } => "kk",
            TaskConfig::ReferenceModels { .. } => "reference-models",
            TaskConfig::FluidCurrent { .. } => "fluid-current",
        }
    }

    pub fn label(&self) -> &str {
        let label = match self {
            TaskConfig::StaticSusc { label }
            | TaskConfig::Spectrum { label, .. }
            | TaskConfig::FdrCheck { label, .. }
            | TaskConfig::Respond { label, .. }
            | TaskConfig::VolterraCheck { label, .. }
            | TaskConfig::WorkStats { label, .. }
            | TaskConfig::Kk { label, .. }
            | TaskConfig::ReferenceModels { label, .. }
            | TaskConfig::FluidCurrent { label, .. } => label,
        };
        label.as_deref().unwrap_or(self.name())
    }

    /// Whether the task needs the configured quantum system.
    pub fn uses_system(&self) -> bool {
        match self {
            TaskConfig::ReferenceModels { .. } | TaskConfig::FluidCurrent { .. } => false,
            TaskConfig::Kk { model, .. } => matches!(model, KkModel::Response { .. }),
            _ => true,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn ten() -> f64 {
    10.0
}
fn twenty() -> f64 {
    20.0
}
fn even() -> i8 {
    1
}
fn bkm() -> String {
    "bkm".into()
}
fn default_steps() -> usize {
    4000
}
fn default_points() -> usize {
    201
}
fn kk_points() -> usize {
    4096
}
fn default_zeta() -> f64 {
    0.2
}
fn default_tau() -> f64 {
    0.1
}
fn default_dir() -> String {
    "out".into()
}
fn default_orders() -> Vec<usize> {
    vec![1, 2]
}
fn default_amplitudes() -> Vec<f64> {
    vec![0.02, 0.04, 0.08]
}

/// Reads and parses a config file. Syntax errors are parse errors; schema
/// violations are validation errors naming the offending path.
pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = if text.trim_start().starts_with('{') {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        serde_path_to_error::deserialize(value).map_err(|e| CliError::Validation {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?
    } else {
        let value: toml::Value = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        serde_path_to_error::deserialize(value).map_err(|e| CliError::Validation {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?
    };
    validate(&cfg)?;
    Ok(cfg)
}

/// Normalized TOML rendering, with every default filled in.
pub fn dump(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Validation { path: path.into(), message: message.into() }
}

fn check_finite(path: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, "must be finite"))
    }
}

/// Semantic checks that do not need the engine.
pub fn validate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    check_finite("ensemble.beta", cfg.ensemble.beta)?;
    check_finite("ensemble.mu", cfg.ensemble.mu)?;
    if cfg.ensemble.beta < 0.0 {
        return Err(invalid("ensemble.beta", "must be non-negative"));
    }
    let mut labels = BTreeSet::new();
    for (i, task) in cfg.tasks.iter().enumerate() {
        if !labels.insert(task.label().to_string()) {
            return Err(invalid(format!("tasks[{i}].label"), format!("duplicate output name `{}`", task.label())));
        }
        let at = |field: &str| format!("tasks[{i}].{field}");
        match task {
            TaskConfig::Spectrum { f, .. } => {
                f.parse::<FTag>().map_err(|e| invalid(at("f"), e.to_string()))?;
            }
            TaskConfig::FdrCheck { f, .. } => {
                for (k, tag) in f.iter().enumerate() {
                    tag.parse::<FTag>().map_err(|e| invalid(format!("tasks[{i}].f[{k}]"), e.to_string()))?;
                }
            }
            TaskConfig::Respond { points, t_max, .. } => {
                if *points < 2 || !(*t_max > 0.0) {
                    return Err(invalid(at("points"), "need at least two points and t_max > 0"));
                }
            }
            TaskConfig::VolterraCheck { orders, amplitudes, .. } => {
                if orders.is_empty() || orders.iter().any(|o| *o != 1 && *o != 2) {
                    return Err(invalid(at("orders"), "orders must be 1 or 2"));
                }
                if amplitudes.len() < 2 || amplitudes.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
                    return Err(invalid(at("amplitudes"), "need at least two positive amplitudes"));
                }
                if cfg.protocol.is_none() {
                    return Err(invalid("protocol", "volterra-check needs a protocol"));
                }
            }
            TaskConfig::WorkStats { .. } => {
                if cfg.protocol.is_none() {
                    return Err(invalid("protocol", "work-stats needs a protocol"));
                }
            }
            TaskConfig::Kk { points, half_width, .. } => {
                if *points < 16 || !(*half_width > 0.0) {
                    return Err(invalid(at("points"), "need at least 16 points and half_width > 0"));
                }
            }
            TaskConfig::ReferenceModels { points, r, c, omega0, zeta, .. } => {
                if *points < 2 {
                    return Err(invalid(at("points"), "need at least two points"));
                }
                if !(*r > 0.0 && *c > 0.0 && *omega0 > 0.0) {
                    return Err(invalid(at("r"), "r, c and omega0 must be positive"));
                }
                if !(*zeta >= 0.0 && *zeta < 1.0) {
                    return Err(invalid(at("zeta"), "damping ratio must lie in [0, 1)"));
                }
            }
            TaskConfig::FluidCurrent { sigma, d, tau, points, .. } => {
                if !(*sigma >= 0.0 && *d > 0.0 && *tau >= 0.0) {
                    return Err(invalid(at("d"), "need sigma >= 0, d > 0, tau >= 0"));
                }
                if *points == 0 {
                    return Err(invalid(at("points"), "need at least one point"));
                }
            }
            TaskConfig::StaticSusc { .. } => {}
        }
    }
    if let Some(p) = &cfg.protocol {
        if !(p.t_f > p.t_i) || p.steps == 0 {
            return Err(invalid("protocol", "need t_i < t_f and steps > 0"));
        }
    }
    Ok(())
}

fn to_matrix(input: &MatrixInput, path: &str) -> Result<Matrix, CliError> {
    let (re, im) = match input {
        MatrixInput::Real(re) => (re, None),
        MatrixInput::Complex { re, im } => (re, Some(im)),
    };
    let n = re.len();
    let square = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
    if n == 0 || !square(re) || im.is_some_and(|im| !square(im)) {
        return Err(invalid(path, "matrix must be square and non-empty"));
    }
    Ok(Matrix::from_fn(n, |j, k| C64::new(re[j][k], im.map_or(0.0, |im| im[j][k]))))
}

fn to_operator(input: &MatrixInput, path: &str) -> Result<Operator, CliError> {
    Operator::new(to_matrix(input, path)?).map_err(|e| invalid(path, e.to_string()))
}

/// Builds the quantum system. Engine-side rejections count as validation errors.
pub fn build_system(cfg: &SystemConfig) -> Result<SystemSpec, CliError> {
    let reject = |e: qresponse::Error| invalid("system", e.to_string());
    match cfg {
        SystemConfig::Qubit { omega0, z_source } => {
            let spec = build_qubit(*omega0).map_err(reject)?;
            if *z_source {
                spec.with_source("z", qresponse::linalg::pauli::sigma_z(), 0.0, 1).map_err(reject)
            } else {
                Ok(spec)
            }
        }
        SystemConfig::Ising { sites, coupling, field, periodic, parity } => {
            let boundary = if *periodic { Boundary::Periodic } else { Boundary::Open };
            let spec = build_transverse_ising_with(*sites, *coupling, *field, boundary).map_err(reject)?;
            match parity {
                Some(eps) => spec
                    .with_parity(TimeParity { eps: eps.clone(), basis_real: true })
                    .map_err(|e| invalid("system.parity", e.to_string())),
                None => Ok(spec),
            }
        }
        SystemConfig::Inline { h0, number, sources } => {
            let mut b = SystemSpec::builder(to_operator(h0, "system.h0")?);
            if let Some(n) = number {
                b = b.number(to_operator(n, "system.number")?);
            }
            let mut eps = Vec::with_capacity(sources.len());
            for (i, s) in sources.iter().enumerate() {
                b = b.source(&s.label, to_operator(&s.phi, &format!("system.sources[{i}].phi"))?, s.j0);
                eps.push(s.parity);
            }
            let real = matches!(h0, MatrixInput::Real(_))
                && number.as_ref().map_or(true, |n| matches!(n, MatrixInput::Real(_)))
                && sources.iter().all(|s| matches!(s.phi, MatrixInput::Real(_)));
            b.with_quadratic_table()
                .with_cubic_table()
                .parity(TimeParity { eps, basis_real: real })
                .build()
                .map_err(reject)
        }
    }
}

/// Maps the protocol section onto the engine; unlisted sources stay at `j_init`.
pub fn build_protocol(cfg: &ProtocolConfig, spec: &SystemSpec) -> Result<DriveProtocol, CliError> {
    let labels = spec.labels();
    let mut waveforms: Vec<Waveform> = spec.j_init().iter().map(|&v| Waveform::Constant(v)).collect();
    let mut seen = BTreeSet::new();
    for (i, d) in cfg.sources.iter().enumerate() {
        let path = format!("protocol.sources[{i}].source");
        let m = labels
            .iter()
            .position(|l| *l == d.source)
            .ok_or_else(|| invalid(&path, format!("unknown source `{}`; known: {}", d.source, labels.join(", "))))?;
        if !seen.insert(m) {
            return Err(invalid(path, format!("source `{}` driven twice", d.source)));
        }
        waveforms[m] = d.waveform.to_waveform();
    }
    DriveProtocol::new(cfg.t_i, cfg.t_f, waveforms).map_err(|e| invalid("protocol", e.to_string()))
}

/// Checks that a source index exists.
pub fn check_source(spec: &SystemSpec, index: usize, path: String) -> Result<(), CliError> {
    if index < spec.num_sources() {
        Ok(())
    } else {
        Err(invalid(path, format!("source index {index} out of range (system has {})", spec.num_sources())))
    }
}

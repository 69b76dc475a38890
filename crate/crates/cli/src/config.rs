//! Strict JSON run-configuration schema and its resolution into core types.
//!
//! Parsing is two-staged: serde deserializes into the literal file schema
//! (unknown keys rejected), then `parse_config` builds validated core
//! objects, accumulating every error with its field path instead of
//! stopping at the first one.

use std::fmt;
use std::path::PathBuf;

use qfeedback_core::linalg::{DensityMatrix, Operator, StateVector};
use qfeedback_core::model::{
    preset_cavity, preset_two_level, IntegrationConfig, SystemModel, ZSpec,
};
use qfeedback_core::Complex64;
use serde::Deserialize;

/// Engine selected by subcommand and/or the config's `engine` field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Master,
    Trajectory,
    Oracle,
    Compare,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Master => "master",
            Engine::Trajectory => "trajectory",
            Engine::Oracle => "oracle",
            Engine::Compare => "compare",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        match name {
            "master" => Some(Engine::Master),
            "trajectory" => Some(Engine::Trajectory),
            "oracle" => Some(Engine::Oracle),
            "compare" => Some(Engine::Compare),
            _ => None,
        }
    }
}

/// Top-level CLI failure, carrying the exit code distinction: config
/// errors (exit 2) versus numerical invariant breaches (exit 3).
#[derive(Debug)]
pub enum CliError {
    /// One message per offending field path.
    Config(Vec<String>),
    Numeric(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msgs) => {
                write!(f, "config error:")?;
                for m in msgs {
                    write!(f, "\n  {m}")?;
                }
                Ok(())
            }
            CliError::Numeric(m) => write!(f, "numerical invariant breach: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }
}

/// Classifies a core error: everything that reflects bad input is a
/// config error; everything that reflects a numerical contract violation
/// at runtime is an invariant breach.
pub fn from_core(err: qfeedback_core::Error) -> CliError {
    use qfeedback_core::Error as E;
    match &err {
        E::InvalidConfig(_)
        | E::InvalidModel(_)
        | E::DimensionMismatch { .. }
        | E::NotPerfectSquare { .. }
        | E::NotHermitian { .. }
        | E::DimensionCapExceeded { .. } => CliError::Config(vec![format!("{err}")]),
        E::InvariantBreach(_)
        | E::NonConvergence(_)
        | E::NoNullVector { .. }
        | E::DegenerateNullSpace { .. }
        | E::ZeroProbabilityJump => CliError::Numeric(format!("{err}")),
    }
}

/// Complex scalar as a `[re, im]` pair; matrices are row-major nested lists.
type ComplexPair = [f64; 2];
type MatrixJson = Vec<Vec<ComplexPair>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    engine: Option<String>,
    model: ModelSection,
    feedback: Option<FeedbackSection>,
    integration: IntegrationSection,
    initial: Option<InitialSection>,
    n_traj: Option<usize>,
    master_seed: Option<u64>,
    output: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    preset: Option<String>,
    // two_level preset parameters.
    omega: Option<f64>,
    gamma: Option<f64>,
    // cavity preset parameters.
    levels: Option<usize>,
    kappa: Option<f64>,
    chi: Option<f64>,
    // Explicit-matrix model.
    dim: Option<usize>,
    hamiltonian: Option<MatrixJson>,
    collapse: Option<MatrixJson>,
    /// Feedback generator: either a `[re, im]` matrix or a named form
    /// like {"type": "sigma_x", "strength": 1.0}. Valid for the
    /// two_level preset and explicit models.
    #[serde(rename = "Z")]
    z: Option<ZSection>,
    observables: Option<Vec<ObservableSection>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ZSection {
    Named(ZNamed),
    Matrix(MatrixJson),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ZNamed {
    #[serde(rename = "type")]
    kind: String,
    strength: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservableSection {
    label: String,
    matrix: MatrixJson,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeedbackSection {
    tau: Option<f64>,
    k: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegrationSection {
    dt: f64,
    t_final: f64,
    record_every: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    basis: Option<usize>,
    state: Option<Vec<ComplexPair>>,
    density_matrix: Option<MatrixJson>,
}

/// Initial condition for any engine; trajectory engines sample `Mixed`
/// by eigendecomposition, the others use the density matrix directly.
#[derive(Clone, Debug)]
pub enum RunInitial {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl RunInitial {
    pub fn density(&self) -> Result<DensityMatrix, CliError> {
        match self {
            RunInitial::Pure(psi) => DensityMatrix::pure(psi).map_err(from_core),
            RunInitial::Mixed(rho) => Ok(rho.clone()),
        }
    }
}

/// Validated configuration, still carrying the optional fields whose
/// requiredness depends on the engine chosen at the command line.
#[derive(Debug)]
pub struct RunConfig {
    pub engine: Option<Engine>,
    pub model: SystemModel,
    pub tau: Option<f64>,
    pub delay_bins: Option<usize>,
    pub integration: IntegrationConfig,
    pub initial: RunInitial,
    pub n_traj: Option<usize>,
    pub master_seed: Option<u64>,
    pub output: Option<String>,
}

/// Command-line overrides; flags win over config values.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub ntraj: Option<usize>,
}

/// Fully resolved run: engine fixed, overrides applied, required fields
/// checked. `n_traj`/`delay_bins` stay optional because only some engines
/// need them.
#[derive(Debug)]
pub struct ResolvedRun {
    pub engine: Engine,
    pub model: SystemModel,
    pub tau: f64,
    pub delay_bins: Option<usize>,
    pub integration: IntegrationConfig,
    pub initial: RunInitial,
    pub n_traj: Option<usize>,
    pub master_seed: u64,
    pub output: PathBuf,
}

fn parse_matrix(path: &str, dim: usize, raw: &MatrixJson, errors: &mut Vec<String>) -> Option<Operator> {
    if raw.len() != dim {
        errors.push(format!("{path}: expected {dim} rows, found {}", raw.len()));
        return None;
    }
    let mut entries = Vec::with_capacity(dim * dim);
    for (i, row) in raw.iter().enumerate() {
        if row.len() != dim {
            errors.push(format!("{path}: row {i} has {} entries, expected {dim}", row.len()));
            return None;
        }
        for &[re, im] in row {
            entries.push(Complex64::new(re, im));
        }
    }
    Some(Operator::from_entries(dim, entries))
}

fn require<T: Copy>(value: Option<T>, path: &str, errors: &mut Vec<String>) -> Option<T> {
    if value.is_none() {
        errors.push(format!("{path} required"));
    }
    value
}

fn forbid<T>(value: &Option<T>, path: &str, context: &str, errors: &mut Vec<String>) {
    if value.is_some() {
        errors.push(format!("{path} not applicable {context}"));
    }
}

fn build_z_spec(section: &ZSection, dim: usize, errors: &mut Vec<String>) -> Option<ZSpec> {
    match section {
        ZSection::Matrix(raw) => {
            let op = parse_matrix("model.Z", dim, raw, errors)?;
            let defect = op.hermiticity_defect();
            if defect > 1e-10 {
                errors.push(format!("model.Z: not Hermitian, defect {defect}"));
                return None;
            }
            Some(ZSpec::Matrix(op))
        }
        ZSection::Named(named) => match named.kind.as_str() {
            "zero" => {
                if named.strength.is_some() {
                    errors.push("model.Z.strength not applicable for type zero".into());
                }
                Some(ZSpec::Zero)
            }
            "sigma_x" => {
                let s = require(named.strength, "model.Z.strength", errors)?;
                Some(ZSpec::SigmaX(s))
            }
            "sigma_z" => {
                let s = require(named.strength, "model.Z.strength", errors)?;
                Some(ZSpec::SigmaZ(s))
            }
            other => {
                errors.push(format!(
                    "model.Z.type: unknown variant \"{other}\" (expected zero, sigma_x, sigma_z, or a matrix)"
                ));
                None
            }
        },
    }
}

fn build_model(section: &ModelSection, errors: &mut Vec<String>) -> Option<SystemModel> {
    match section.preset.as_deref() {
        Some("two_level") => {
            forbid(&section.levels, "model.levels", "for preset two_level", errors);
            forbid(&section.kappa, "model.kappa", "for preset two_level", errors);
            forbid(&section.chi, "model.chi", "for preset two_level", errors);
            forbid(&section.dim, "model.dim", "for preset two_level", errors);
            forbid(&section.hamiltonian, "model.hamiltonian", "for preset two_level", errors);
            forbid(&section.collapse, "model.collapse", "for preset two_level", errors);
            forbid(&section.observables, "model.observables", "for preset two_level", errors);
            let omega = require(section.omega, "model.omega", errors);
            let gamma = require(section.gamma, "model.gamma", errors);
            let z = match &section.z {
                Some(z) => build_z_spec(z, 2, errors)?,
                None => ZSpec::Zero,
            };
            let (omega, gamma) = (omega?, gamma?);
            match preset_two_level(omega, gamma, &z) {
                Ok(model) => Some(model),
                Err(e) => {
                    errors.push(format!("model: {e}"));
                    None
                }
            }
        }
        Some("cavity") => {
            forbid(&section.omega, "model.omega", "for preset cavity", errors);
            forbid(&section.gamma, "model.gamma", "for preset cavity", errors);
            forbid(&section.dim, "model.dim", "for preset cavity", errors);
            forbid(&section.hamiltonian, "model.hamiltonian", "for preset cavity", errors);
            forbid(&section.collapse, "model.collapse", "for preset cavity", errors);
            forbid(&section.z, "model.Z", "for preset cavity (Z = chi * photon_number)", errors);
            forbid(&section.observables, "model.observables", "for preset cavity", errors);
            let levels = require(section.levels, "model.levels", errors);
            let kappa = require(section.kappa, "model.kappa", errors);
            let chi = require(section.chi, "model.chi", errors);
            let (levels, kappa, chi) = (levels?, kappa?, chi?);
            match preset_cavity(levels, kappa, chi) {
                Ok(model) => Some(model),
                Err(e) => {
                    errors.push(format!("model: {e}"));
                    None
                }
            }
        }
        Some(other) => {
            errors.push(format!(
                "model.preset: unknown preset \"{other}\" (expected two_level or cavity)"
            ));
            None
        }
        None => {
            forbid(&section.omega, "model.omega", "without a preset", errors);
            forbid(&section.gamma, "model.gamma", "without a preset", errors);
            forbid(&section.levels, "model.levels", "without a preset", errors);
            forbid(&section.kappa, "model.kappa", "without a preset", errors);
            forbid(&section.chi, "model.chi", "without a preset", errors);
            let dim = require(section.dim, "model.dim", errors)?;
            if dim == 0 {
                errors.push("model.dim: must be >= 1".into());
                return None;
            }
            let h_raw = section.hamiltonian.as_ref().or_else(|| {
                errors.push("model.hamiltonian required".into());
                None
            });
            let c_raw = section.collapse.as_ref().or_else(|| {
                errors.push("model.collapse required".into());
                None
            });
            let h = h_raw.and_then(|raw| parse_matrix("model.hamiltonian", dim, raw, errors));
            let c = c_raw.and_then(|raw| parse_matrix("model.collapse", dim, raw, errors));
            let z = match &section.z {
                Some(ZSection::Matrix(raw)) => parse_matrix("model.Z", dim, raw, errors),
                Some(ZSection::Named(_)) => {
                    errors.push(
                        "model.Z: named forms are two-level only; explicit models need a matrix"
                            .into(),
                    );
                    None
                }
                None => Some(Operator::zeros(dim)),
            };
            let mut observables = Vec::new();
            if let Some(list) = &section.observables {
                for (i, obs) in list.iter().enumerate() {
                    if let Some(op) =
                        parse_matrix(&format!("model.observables[{i}].matrix"), dim, &obs.matrix, errors)
                    {
                        observables.push((obs.label.clone(), op));
                    }
                }
            }
            let (h, c, z) = (h?, c?, z?);
            // Pre-check Hermiticity so the message carries the field path.
            let h_defect = h.hermiticity_defect();
            if h_defect > 1e-10 {
                errors.push(format!("model.hamiltonian: not Hermitian, defect {h_defect}"));
                return None;
            }
            let z_defect = z.hermiticity_defect();
            if z_defect > 1e-10 {
                errors.push(format!("model.Z: not Hermitian, defect {z_defect}"));
                return None;
            }
            match SystemModel::new(h, c, z, observables) {
                Ok(model) => Some(model),
                Err(e) => {
                    errors.push(format!("model: {e}"));
                    None
                }
            }
        }
    }
}

fn build_initial(
    section: &Option<InitialSection>,
    dim: usize,
    errors: &mut Vec<String>,
) -> Option<RunInitial> {
    let Some(section) = section else {
        return Some(RunInitial::Pure(StateVector::basis(dim, 0)));
    };
    let given = usize::from(section.basis.is_some())
        + usize::from(section.state.is_some())
        + usize::from(section.density_matrix.is_some());
    if given != 1 {
        errors.push(
            "initial: exactly one of basis, state, density_matrix must be given".into(),
        );
        return None;
    }
    if let Some(index) = section.basis {
        if index >= dim {
            errors.push(format!("initial.basis: index {index} out of range for dim {dim}"));
            return None;
        }
        return Some(RunInitial::Pure(StateVector::basis(dim, index)));
    }
    if let Some(amps) = &section.state {
        if amps.len() != dim {
            errors.push(format!(
                "initial.state: expected {dim} amplitudes, found {}",
                amps.len()
            ));
            return None;
        }
        let mut psi = StateVector::from_amplitudes(
            amps.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
        );
        if psi.normalize().is_err() {
            errors.push("initial.state: zero vector cannot be normalized".into());
            return None;
        }
        return Some(RunInitial::Pure(psi));
    }
    let raw = section.density_matrix.as_ref().unwrap();
    let op = parse_matrix("initial.density_matrix", dim, raw, errors)?;
    match DensityMatrix::new(op) {
        Ok(rho) => Some(RunInitial::Mixed(rho)),
        Err(e) => {
            errors.push(format!("initial.density_matrix: {e}"));
            None
        }
    }
}

/// Checks engine-specific required fields and the τ = k·dt consistency
/// contract shared by `parse_config` (config-declared engine) and
/// `resolve` (subcommand engine).
fn check_engine_fields(
    engine: Engine,
    n_traj: Option<usize>,
    tau: Option<f64>,
    delay_bins: Option<usize>,
    dt: f64,
    errors: &mut Vec<String>,
) {
    match engine {
        Engine::Trajectory | Engine::Compare => {
            if n_traj.is_none() {
                errors.push("n_traj required".into());
            }
        }
        Engine::Master | Engine::Oracle => {}
    }
    match engine {
        Engine::Oracle | Engine::Compare => {
            if delay_bins.is_none() {
                errors.push(format!(
                    "feedback.k required for engine {} (tau = k*dt)",
                    engine.name()
                ));
            }
        }
        Engine::Master | Engine::Trajectory => {}
    }
    if let (Some(tau), Some(k)) = (tau, delay_bins) {
        let implied = k as f64 * dt;
        if (tau - implied).abs() > 1e-9 * implied.max(1.0) {
            errors.push(format!(
                "feedback: tau={tau} inconsistent with k*dt = {k}*{dt} = {implied}"
            ));
        }
    }
    if engine == Engine::Master {
        let effective = tau.or_else(|| delay_bins.map(|k| k as f64 * dt)).unwrap_or(0.0);
        if effective != 0.0 {
            errors.push(format!(
                "feedback: master engine integrates the tau=0 equation; got tau={effective}"
            ));
        }
    }
}

/// Parses and validates a UTF-8 JSON config. Unknown keys are errors;
/// all detected problems are reported together, each naming its field
/// path. Engine-dependent requirements are checked against the config's
/// own `engine` field when present.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let file: ConfigFile = serde_json::from_str(text)
        .map_err(|e| CliError::config(format!("invalid JSON: {e}")))?;

    let mut errors = Vec::new();

    let engine = match &file.engine {
        Some(name) => match Engine::from_name(name) {
            Some(engine) => Some(engine),
            None => {
                errors.push(format!(
                    "engine: unknown engine \"{name}\" (expected master, trajectory, oracle, compare)"
                ));
                None
            }
        },
        None => None,
    };

    let model = build_model(&file.model, &mut errors);

    let record_every = file.integration.record_every.unwrap_or(1);
    let integration =
        match IntegrationConfig::new(file.integration.dt, file.integration.t_final, record_every) {
            Ok(cfg) => Some(cfg),
            Err(e) => {
                errors.push(format!("integration: {e}"));
                None
            }
        };

    let (tau, delay_bins) = match &file.feedback {
        Some(section) => (section.tau, section.k),
        None => (None, None),
    };
    if let Some(tau) = tau {
        if tau < 0.0 {
            errors.push(format!("feedback.tau: must be >= 0, got {tau}"));
        }
    }

    let initial = model
        .as_ref()
        .and_then(|m| build_initial(&file.initial, m.dim(), &mut errors));

    if let Some(n) = file.n_traj {
        if n == 0 {
            errors.push("n_traj: must be >= 1".into());
        }
    }

    if let Some(engine) = engine {
        check_engine_fields(engine, file.n_traj, tau, delay_bins, file.integration.dt, &mut errors);
    }

    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    Ok(RunConfig {
        engine,
        model: model.unwrap(),
        tau,
        delay_bins,
        integration: integration.unwrap(),
        initial: initial.unwrap(),
        n_traj: file.n_traj,
        master_seed: file.master_seed,
        output: file.output,
    })
}

/// Fixes the engine from the subcommand, applies flag overrides, and
/// enforces the engine-specific requirements.
pub fn resolve(
    engine: Engine,
    config: RunConfig,
    overrides: &Overrides,
) -> Result<ResolvedRun, CliError> {
    let mut errors = Vec::new();

    if let Some(declared) = config.engine {
        if declared != engine {
            errors.push(format!(
                "engine: config declares \"{}\" but subcommand is \"{}\"",
                declared.name(),
                engine.name()
            ));
        }
    }

    let n_traj = overrides.ntraj.or(config.n_traj);
    if let Some(0) = overrides.ntraj {
        errors.push("--ntraj: must be >= 1".into());
    }
    if engine == Engine::Compare {
        if let Some(n) = n_traj {
            if n < 2 {
                errors.push("n_traj: compare engine needs >= 2 for standard errors".into());
            }
        }
    }

    check_engine_fields(
        engine,
        n_traj,
        config.tau,
        config.delay_bins,
        config.integration.dt,
        &mut errors,
    );

    let tau = config
        .tau
        .or_else(|| config.delay_bins.map(|k| k as f64 * config.integration.dt))
        .unwrap_or(0.0);

    let output = overrides
        .output
        .clone()
        .or_else(|| config.output.as_ref().map(PathBuf::from));
    if output.is_none() {
        errors.push("output required (config field or --output)".into());
    }

    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    Ok(ResolvedRun {
        engine,
        model: config.model,
        tau,
        delay_bins: config.delay_bins,
        integration: config.integration,
        initial: config.initial,
        n_traj,
        master_seed: overrides.seed.or(config.master_seed).unwrap_or(0),
        output: output.unwrap(),
    })
}

impl ResolvedRun {
    /// One-line JSON rendering of every value the run will actually use.
    pub fn effective_config(&self) -> String {
        let labels: Vec<&str> =
            self.model.observables().iter().map(|(l, _)| l.as_str()).collect();
        let value = serde_json::json!({
            "engine": self.engine.name(),
            "dim": self.model.dim(),
            "observables": labels,
            "tau": self.tau,
            "k": self.delay_bins,
            "dt": self.integration.dt,
            "t_final": self.integration.t_final,
            "record_every": self.integration.record_every,
            "n_traj": self.n_traj,
            "master_seed": self.master_seed,
            "output": self.output.display().to_string(),
        });
        value.to_string()
    }
}

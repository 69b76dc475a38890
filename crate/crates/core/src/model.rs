//! Physical system definitions: Hamiltonian H, collapse operator c, feedback
//! generator Z, delay, and integration settings, plus the presets used by
//! tests and the CLI.
//!
//! Conventions fixed here once for the whole crate:
//! * rates are in units of γ (or κ), time in units of 1/γ, ħ = 1;
//! * two-level basis: index 0 = excited, index 1 = ground;
//! * the field propagation speed never appears — the feedback point enters
//!   only through the round-trip delay τ.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::linalg::{
    lowering, sigma_minus, sigma_plus, sigma_x, sigma_y, sigma_z, Complex64, Operator,
};
use crate::{Error, Result};

/// The triple (H, c, Z) plus labeled observables.
#[derive(Clone, Debug)]
pub struct SystemModel {
    dim: usize,
    hamiltonian: Operator,
    collapse: Operator,
    feedback_generator: Operator,
    observables: Vec<(String, Operator)>,
}

impl SystemModel {
    /// Builds and validates a model; all invariant violations are reported
    /// together.
    pub fn new(
        hamiltonian: Operator,
        collapse: Operator,
        feedback_generator: Operator,
        observables: Vec<(String, Operator)>,
    ) -> Result<Self> {
        let model = SystemModel {
            dim: hamiltonian.dim(),
            hamiltonian,
            collapse,
            feedback_generator,
            observables,
        };
        let violations = model.validate();
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(Error::InvalidModel(violations))
        }
    }

    /// Checks every type invariant; returns one message per violation and
    /// never fails.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        let h_defect = self.hamiltonian.hermiticity_defect();
        if h_defect > 1e-12 {
            violations.push(format!("hamiltonian not Hermitian: defect {h_defect}"));
        }
        let z_defect = self.feedback_generator.hermiticity_defect();
        if z_defect > 1e-12 {
            violations.push(format!("feedback_generator not Hermitian: defect {z_defect}"));
        }
        for (name, op) in [
            ("hamiltonian", &self.hamiltonian),
            ("collapse", &self.collapse),
            ("feedback_generator", &self.feedback_generator),
        ] {
            if op.dim() != self.dim {
                violations.push(format!(
                    "{name} has dim {} but model has dim {}",
                    op.dim(),
                    self.dim
                ));
            }
        }
        for (label, op) in &self.observables {
            if op.dim() != self.dim {
                violations.push(format!(
                    "observable {label} has dim {} but model has dim {}",
                    op.dim(),
                    self.dim
                ));
            }
        }
        violations
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn collapse(&self) -> &Operator {
        &self.collapse
    }

    pub fn feedback_generator(&self) -> &Operator {
        &self.feedback_generator
    }

    pub fn observables(&self) -> &[(String, Operator)] {
        &self.observables
    }

    /// e^{−iZ}, the unitary applied per detected photon.
    pub fn feedback_unitary(&self) -> Result<Operator> {
        self.feedback_generator
            .scale(Complex64::new(0.0, -1.0))
            .matrix_exp()
    }
}

/// How the feedback generator of a preset is specified.
#[derive(Clone, Debug)]
pub enum ZSpec {
    /// Explicit Hermitian matrix.
    Matrix(Operator),
    /// λ σ_x.
    SigmaX(f64),
    /// φ σ_z.
    SigmaZ(f64),
    /// No feedback.
    Zero,
}

impl ZSpec {
    fn build(&self, dim: usize) -> Result<Operator> {
        let z = match self {
            ZSpec::Matrix(m) => m.clone(),
            ZSpec::SigmaX(lambda) => {
                require_dim_two(dim)?;
                sigma_x().scale(Complex64::new(*lambda, 0.0))
            }
            ZSpec::SigmaZ(phi) => {
                require_dim_two(dim)?;
                sigma_z().scale(Complex64::new(*phi, 0.0))
            }
            ZSpec::Zero => Operator::zeros(dim),
        };
        let defect = z.hermiticity_defect();
        if defect > 1e-12 {
            return Err(Error::NotHermitian { what: "Z", defect });
        }
        if z.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: z.dim() });
        }
        Ok(z)
    }
}

fn require_dim_two(dim: usize) -> Result<()> {
    if dim != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: dim });
    }
    Ok(())
}

/// Driven two-level atom: H = (Ω/2) σ_x, c = √γ σ₋, Z from `z_spec`.
/// Observables: σ_z, σ₊σ₋ (excited population), σ_x, σ_y.
pub fn preset_two_level(omega: f64, gamma: f64, z_spec: &ZSpec) -> Result<SystemModel> {
    if gamma <= 0.0 {
        return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
    }
    let h = sigma_x().scale(Complex64::new(omega / 2.0, 0.0));
    let c = sigma_minus().scale(Complex64::new(num_traits::Float::sqrt(gamma), 0.0));
    let z = z_spec.build(2)?;
    let observables = alloc::vec![
        (String::from("sigma_z"), sigma_z()),
        (String::from("sigma_plus_sigma_minus"), &sigma_plus() * &sigma_minus()),
        (String::from("sigma_x"), sigma_x()),
        (String::from("sigma_y"), sigma_y()),
    ];
    SystemModel::new(h, c, z, observables)
}

/// Leaky cavity truncated to N Fock levels: H = 0, c = √κ a, Z = χ a†a.
/// Fock index = photon number. Observable: photon number a†a.
pub fn preset_cavity(levels: usize, kappa: f64, chi: f64) -> Result<SystemModel> {
    if levels < 2 {
        return Err(Error::InvalidConfig(format!("cavity needs >= 2 levels, got {levels}")));
    }
    if kappa <= 0.0 {
        return Err(Error::InvalidConfig(format!("kappa must be positive, got {kappa}")));
    }
    let a = lowering(levels);
    let number = &a.dagger() * &a;
    let h = Operator::zeros(levels);
    let c = a.scale(Complex64::new(num_traits::Float::sqrt(kappa), 0.0));
    let z = number.scale(Complex64::new(chi, 0.0));
    let observables = alloc::vec![(String::from("photon_number"), number)];
    SystemModel::new(h, c, z, observables)
}

/// Whether feedback is applied in the same instant as detection or after a
/// round-trip delay. `mode == Markovian` exactly when τ = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FeedbackMode {
    Markovian,
    Delayed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeedbackConfig {
    tau: f64,
    mode: FeedbackMode,
}

impl FeedbackConfig {
    pub fn markovian() -> Self {
        FeedbackConfig { tau: 0.0, mode: FeedbackMode::Markovian }
    }

    /// Classifies by τ: zero delay is Markovian, anything positive is delayed.
    pub fn from_delay(tau: f64) -> Result<Self> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidConfig(format!("delay must be non-negative, got {tau}")));
        }
        Ok(if tau == 0.0 {
            FeedbackConfig::markovian()
        } else {
            FeedbackConfig { tau, mode: FeedbackMode::Delayed }
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn mode(&self) -> FeedbackMode {
        self.mode
    }
}

/// Fixed-step integration window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_final: f64,
    pub record_every: usize,
}

impl IntegrationConfig {
    pub fn new(dt: f64, t_final: f64, record_every: usize) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        if !(t_final > 0.0) {
            return Err(Error::InvalidConfig(format!("t_final must be positive, got {t_final}")));
        }
        if dt > t_final {
            return Err(Error::InvalidConfig(format!(
                "dt {dt} exceeds t_final {t_final}"
            )));
        }
        if record_every == 0 {
            return Err(Error::InvalidConfig(String::from("record_every must be >= 1")));
        }
        let steps = t_final / dt;
        if !(steps <= u32::MAX as f64) {
            return Err(Error::InvalidConfig(format!("{steps} steps do not fit an integer")));
        }
        Ok(IntegrationConfig { dt, t_final, record_every })
    }

    /// Number of whole steps covering [0, t_final].
    pub fn n_steps(&self) -> usize {
        let raw = self.t_final / self.dt;
        let rounded = num_traits::Float::round(raw);
        if num_traits::Float::abs(raw - rounded) < 1e-9 {
            rounded as usize
        } else {
            num_traits::Float::ceil(raw) as usize
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{StateVector, ZERO};

    #[test]
    fn presets_pass_validation() {
        for model in [
            preset_two_level(0.0, 1.0, &ZSpec::Zero).unwrap(),
            preset_two_level(2.0, 1.0, &ZSpec::SigmaX(1.0)).unwrap(),
            preset_two_level(0.0, 1.0, &ZSpec::SigmaZ(0.4)).unwrap(),
            preset_cavity(4, 1.0, 0.7).unwrap(),
        ] {
            assert!(model.validate().is_empty());
        }
    }

    #[test]
    fn pure_decay_preset_shape() {
        let model = preset_two_level(0.0, 1.0, &ZSpec::Zero).unwrap();
        assert_eq!(model.dim(), 2);
        assert!(model.hamiltonian().max_abs_diff(&Operator::zeros(2)) == 0.0);
        assert!(model.collapse().max_abs_diff(&sigma_minus()) < 1e-15);
        assert!(model.feedback_generator().max_abs_diff(&Operator::zeros(2)) == 0.0);
    }

    #[test]
    fn sigma_x_feedback_jump_operator_closed_form() {
        // e^{−iλσx} √γ σ₋ = (cos λ · I − i sin λ · σx) √γ σ₋
        let lambda = 0.8;
        let model = preset_two_level(0.0, 1.0, &ZSpec::SigmaX(lambda)).unwrap();
        let u = model.feedback_unitary().unwrap();
        let expected_u = &Operator::identity(2).scale(Complex64::new(lambda.cos(), 0.0))
            + &sigma_x().scale(Complex64::new(0.0, -lambda.sin()));
        assert!(u.max_abs_diff(&expected_u) < 1e-12);
        let jump = &u * model.collapse();
        let expected = &expected_u * &sigma_minus();
        assert!(jump.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn cavity_two_levels_matches_two_level_preset_under_relabeling() {
        // Cavity index = photon number (0 = empty); two-level index 0 =
        // excited. The basis mapping swaps indices 0 and 1.
        let cavity = preset_cavity(2, 1.0, 0.0).unwrap();
        let atom = preset_two_level(0.0, 1.0, &ZSpec::Zero).unwrap();
        let swap = sigma_x();
        for (cav_op, atom_op) in [
            (cavity.hamiltonian(), atom.hamiltonian()),
            (cavity.collapse(), atom.collapse()),
            (cavity.feedback_generator(), atom.feedback_generator()),
        ] {
            let relabeled = &(&swap * cav_op) * &swap;
            assert!(relabeled.max_abs_diff(atom_op) < 1e-15);
        }
    }

    #[test]
    fn number_operator_on_single_photon() {
        let model = preset_cavity(3, 1.0, 0.0).unwrap();
        let number = &model.observables()[0].1;
        let one_photon = StateVector::basis(3, 1);
        assert!((one_photon.expectation(number) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn cavity_pi_kerr_feedback_is_parity() {
        // χ = π: e^{−i π a†a} = diag(1, −1, 1, −1).
        let model = preset_cavity(4, 1.0, core::f64::consts::PI).unwrap();
        let u = model.feedback_unitary().unwrap();
        let mut expected = Operator::zeros(4);
        for (i, v) in [1.0, -1.0, 1.0, -1.0].iter().enumerate() {
            expected[(i, i)] = Complex64::new(*v, 0.0);
        }
        assert!(u.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn validate_reports_non_hermitian_hamiltonian() {
        let mut h = Operator::zeros(2);
        h[(0, 1)] = Complex64::new(1.0, 0.0);
        let model = SystemModel {
            dim: 2,
            hamiltonian: h,
            collapse: Operator::zeros(2),
            feedback_generator: Operator::zeros(2),
            observables: Vec::new(),
        };
        let violations = model.validate();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0], "hamiltonian not Hermitian: defect 1");
    }

    #[test]
    fn validate_reports_dimension_mismatch() {
        let model = SystemModel {
            dim: 2,
            hamiltonian: Operator::zeros(2),
            collapse: Operator::zeros(2),
            feedback_generator: Operator::zeros(3),
            observables: Vec::new(),
        };
        let violations = model.validate();
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("feedback_generator has dim 3"));
    }

    #[test]
    fn preset_rejects_non_hermitian_z() {
        let mut z = Operator::zeros(2);
        z[(0, 1)] = Complex64::new(0.3, 0.0);
        assert!(z[(1, 0)] == ZERO);
        let err = preset_two_level(0.0, 1.0, &ZSpec::Matrix(z)).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { what: "Z", .. }));
    }

    #[test]
    fn feedback_config_mode_tracks_delay() {
        assert_eq!(FeedbackConfig::from_delay(0.0).unwrap().mode(), FeedbackMode::Markovian);
        assert_eq!(FeedbackConfig::from_delay(0.5).unwrap().mode(), FeedbackMode::Delayed);
        assert!(FeedbackConfig::from_delay(-1.0).is_err());
        assert!(FeedbackConfig::from_delay(f64::NAN).is_err());
    }

    #[test]
    fn integration_config_rejects_bad_windows() {
        assert!(IntegrationConfig::new(0.0, 1.0, 1).is_err());
        assert!(IntegrationConfig::new(0.1, -1.0, 1).is_err());
        assert!(IntegrationConfig::new(2.0, 1.0, 1).is_err());
        assert!(IntegrationConfig::new(0.1, 1.0, 0).is_err());
        assert_eq!(IntegrationConfig::new(1e-3, 5.0, 10).unwrap().n_steps(), 5000);
    }
}

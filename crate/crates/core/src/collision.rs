//! First-principles time-bin oracle for the feedback dynamics.
//!
//! The 1-D field is discretized into two-level bins of duration dt. Each
//! step a fresh vacuum bin interacts with the system through the dipole
//! unitary exp(√dt (B†c − c†B)), the bin that interacted k steps earlier
//! receives the conditional feedback unitary exp(−i Z⊗n), and the oldest
//! bin is then traced out. The reduced system dynamics converges at O(dt)
//! to the feedback master equation (k = 0) and to the delayed-trajectory
//! ensemble (k > 0); nothing here shares code with either engine, which is
//! what makes it an oracle.
//!
//! Joint-state ordering: system factor first, then bins oldest → newest
//! (newest least significant).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

// Needed for f64 methods in no_std builds; shadowed by inherent methods otherwise.
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{Complex64, DensityMatrix, Operator, StateVector, ZERO};
use crate::model::{FeedbackConfig, IntegrationConfig, SystemModel};
use crate::trajectory::{ensemble_average, EnsembleSeries, InitialState};
use crate::{Error, Result};

pub const DEFAULT_DIMENSION_CAP: usize = 1 << 14;

/// Allowance coefficient for first-order discretization error when
/// comparing the oracle with trajectory ensembles: the band is
/// 5·SE + C·dt with this C.
pub const DEFAULT_ALLOWANCE_COEFFICIENT: f64 = 2.0;

/// Time-bin discretization: delay is always a whole number of bins,
/// τ = k·dt exactly.
#[derive(Clone, Copy, Debug)]
pub struct FieldDiscretization {
    dt: f64,
    delay_bins: usize,
    dimension_cap: usize,
}

impl FieldDiscretization {
    pub fn new(dt: f64, delay_bins: usize) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        Ok(FieldDiscretization { dt, delay_bins, dimension_cap: DEFAULT_DIMENSION_CAP })
    }

    pub fn with_dimension_cap(mut self, cap: usize) -> Self {
        self.dimension_cap = cap;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn delay_bins(&self) -> usize {
        self.delay_bins
    }

    pub fn tau(&self) -> f64 {
        self.delay_bins as f64 * self.dt
    }

    fn check_cap(&self, sys_dim: usize) -> Result<()> {
        let required = sys_dim << (self.delay_bins + 1);
        if required > self.dimension_cap {
            return Err(Error::DimensionCapExceeded { required, cap: self.dimension_cap });
        }
        Ok(())
    }
}

/// Bin annihilator B in the {|0⟩, |1⟩} truncation; [B, B†] = 1 on the
/// vacuum sector, which is all a vacuum-input field ever explores at O(dt).
pub fn bin_annihilator() -> Operator {
    Operator::from_rows(&[&[(0.0, 0.0), (1.0, 0.0)], &[(0.0, 0.0), (0.0, 0.0)]])
}

/// Bin number operator n = B†B.
pub fn bin_number() -> Operator {
    &bin_annihilator().dagger() * &bin_annihilator()
}

/// One-step system⊗bin unitary: exp(−i dt H⊗I) · exp(√dt (B†c − c†B)),
/// in that order (the two differ at O(dt²); the ordering is fixed).
pub fn interaction_unitary(model: &SystemModel, dt: f64) -> Result<Operator> {
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    let b = bin_annihilator();
    let c = model.collapse();
    let coupling = &c.kron(&b.dagger()) - &c.dagger().kron(&b);
    let dipole = coupling.scale(Complex64::new(dt.sqrt(), 0.0)).matrix_exp()?;
    let hamiltonian = model
        .hamiltonian()
        .kron(&Operator::identity(2))
        .scale(Complex64::new(0.0, -dt))
        .matrix_exp()?;
    Ok(&hamiltonian * &dipole)
}

/// Conditional feedback unitary exp(−i Z⊗n) on system⊗bin: identity when
/// the bin is empty, e^{−iZ} on the system when it holds a photon.
pub fn feedback_unitary(model: &SystemModel) -> Result<Operator> {
    let z = model.feedback_generator();
    let defect = z.hermiticity_defect();
    if defect > 1e-12 {
        return Err(Error::NotHermitian { what: "Z", defect });
    }
    z.kron(&bin_number()).scale(Complex64::new(0.0, -1.0)).matrix_exp()
}

/// Embeds a system⊗bin operator into system ⊗ mid ⊗ bin (bin least
/// significant, `mid` untouched).
fn embed_sys_and_last(pair: &Operator, sys_dim: usize, mid: usize) -> Operator {
    assert_eq!(pair.dim(), sys_dim * 2);
    let full = sys_dim * mid * 2;
    let mut out = Operator::zeros(full);
    for s in 0..sys_dim {
        for sp in 0..sys_dim {
            for b in 0..2 {
                for bp in 0..2 {
                    let value = pair[(s * 2 + b, sp * 2 + bp)];
                    if value == ZERO {
                        continue;
                    }
                    for r in 0..mid {
                        out[((s * mid + r) * 2 + b, (sp * mid + r) * 2 + bp)] = value;
                    }
                }
            }
        }
    }
    out
}

/// ρ ⊗ |0⟩⟨0| with the fresh bin appended as the least significant factor.
fn append_vacuum_bin(rho: &Operator) -> Operator {
    let n = rho.dim();
    let mut out = Operator::zeros(2 * n);
    for i in 0..n {
        for j in 0..n {
            out[(2 * i, 2 * j)] = rho[(i, j)];
        }
    }
    out
}

/// Traces out the oldest bin: joint index (s, b, rest) with `rest` of
/// dimension `trailing`.
fn trace_out_oldest(rho: &Operator, sys_dim: usize, trailing: usize) -> Operator {
    let reduced_dim = sys_dim * trailing;
    let mut out = Operator::zeros(reduced_dim);
    for s in 0..sys_dim {
        for sp in 0..sys_dim {
            for r in 0..trailing {
                for rp in 0..trailing {
                    let mut acc = ZERO;
                    for b in 0..2 {
                        acc += rho[((s * 2 + b) * trailing + r, (sp * 2 + b) * trailing + rp)];
                    }
                    out[(s * trailing + r, sp * trailing + rp)] = acc;
                }
            }
        }
    }
    out
}

/// Traces out all bins, leaving the reduced system state.
fn reduce_to_system(rho: &Operator, sys_dim: usize, bins_dim: usize) -> Operator {
    let mut out = Operator::zeros(sys_dim);
    for s in 0..sys_dim {
        for sp in 0..sys_dim {
            let mut acc = ZERO;
            for r in 0..bins_dim {
                acc += rho[(s * bins_dim + r, sp * bins_dim + r)];
            }
            out[(s, sp)] = acc;
        }
    }
    out
}

/// Population of the oldest bin's |1⟩ level, checked against the truncation
/// bound just before trace-out.
fn oldest_bin_excitation(rho: &Operator, sys_dim: usize, trailing: usize) -> f64 {
    let mut acc = 0.0;
    for s in 0..sys_dim {
        for r in 0..trailing {
            acc += rho[((s * 2 + 1) * trailing + r, (s * 2 + 1) * trailing + r)].re;
        }
    }
    acc
}

/// Runs the collision model and records the reduced system state every
/// `record_every` steps (plus t = 0 and the final time).
pub fn run_oracle(
    model: &SystemModel,
    disc: &FieldDiscretization,
    rho0: &DensityMatrix,
    t_final: f64,
    record_every: usize,
) -> Result<Vec<(f64, DensityMatrix)>> {
    let violations = model.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidModel(violations));
    }
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: rho0.dim() });
    }
    disc.check_cap(model.dim())?;
    let cfg = IntegrationConfig::new(disc.dt, t_final, record_every)?;

    let d = model.dim();
    let k = disc.delay_bins;
    let window: usize = 1 << k; // k retained bins between steps
    let interaction = embed_sys_and_last(&interaction_unitary(model, disc.dt)?, d, window);
    // The feedback pair acts on (system, oldest); those are the two leading
    // factors, so the embedding is a plain Kronecker product.
    let feedback = feedback_unitary(model)?.kron(&Operator::identity(window));

    // O(dt) truncation bound for the bin excitation.
    let cc = &model.collapse().dagger() * model.collapse();
    let excitation_bound = 10.0 * cc.norm_one() * disc.dt + 1e-12;

    // k bins of vacuum to the right of the system.
    let mut joint = rho0.operator().clone();
    for _ in 0..k {
        joint = append_vacuum_bin(&joint);
    }

    let n_steps = cfg.n_steps();
    let mut out = Vec::with_capacity(n_steps / record_every + 2);
    out.push((0.0, rho0.clone()));

    for step in 0..n_steps {
        let mut extended = append_vacuum_bin(&joint);
        extended = &(&interaction * &extended) * &interaction.dagger();
        extended = &(&feedback * &extended) * &feedback.dagger();

        let norm_defect = (extended.trace().re - 1.0).abs();
        if norm_defect > 1e-10 {
            return Err(Error::InvariantBreach(format!(
                "joint trace drifted by {norm_defect:e} at step {step}"
            )));
        }
        let excitation = oldest_bin_excitation(&extended, d, window);
        if excitation > excitation_bound {
            return Err(Error::InvariantBreach(format!(
                "oldest-bin excitation {excitation:e} exceeds truncation bound {excitation_bound:e}"
            )));
        }

        joint = trace_out_oldest(&extended, d, window);

        if (step + 1) % record_every == 0 || step + 1 == n_steps {
            let t = (step + 1) as f64 * disc.dt;
            let reduced = reduce_to_system(&joint, d, window);
            let rho = DensityMatrix::new_with_positivity_floor(reduced, -1e-8)
                .map_err(|e| Error::InvariantBreach(format!("reduced state at t={t}: {e}")))?;
            out.push((t, rho));
        }
    }
    Ok(out)
}

/// Per-observable outcome of an oracle-vs-ensemble comparison.
#[derive(Clone, Debug)]
pub struct ObservableComparison {
    pub label: String,
    pub max_abs_diff: f64,
    pub max_allowed: f64,
    pub pass: bool,
}

/// Full comparison between the collision oracle and the delayed-trajectory
/// ensemble at matching τ = k·dt.
#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// oracle_values[time][observable]
    pub oracle_values: Vec<Vec<f64>>,
    pub ensemble_means: Vec<Vec<f64>>,
    pub std_errors: Vec<Vec<f64>>,
    pub allowance: f64,
    pub per_observable: Vec<ObservableComparison>,
    pub pass: bool,
}

/// Runs both sides and checks |oracle − mean| ≤ 5·SE + C·dt per observable
/// and time. The report never fails; `pass` carries the verdict.
pub fn oracle_vs_delayed_trajectories(
    model: &SystemModel,
    disc: &FieldDiscretization,
    psi0: &StateVector,
    n_traj: usize,
    master_seed: u64,
    t_final: f64,
    record_every: usize,
    allowance_coefficient: f64,
) -> Result<ComparisonReport> {
    if n_traj < 2 {
        return Err(Error::InvalidConfig(String::from(
            "comparison needs n_traj >= 2 for standard errors",
        )));
    }
    let rho0 = DensityMatrix::pure(psi0)?;
    let oracle_series = run_oracle(model, disc, &rho0, t_final, record_every)?;

    let cfg = IntegrationConfig::new(disc.dt, t_final, record_every)?;
    let feedback = FeedbackConfig::from_delay(disc.tau())?;
    let ensemble: EnsembleSeries = ensemble_average(
        model,
        feedback,
        &cfg,
        &InitialState::Pure(psi0.clone()),
        n_traj,
        master_seed,
    )?;

    if oracle_series.len() != ensemble.times.len() {
        return Err(Error::InvariantBreach(format!(
            "recording mismatch: oracle {} points, ensemble {}",
            oracle_series.len(),
            ensemble.times.len()
        )));
    }

    let allowance = allowance_coefficient * disc.dt;
    let labels: Vec<String> = ensemble.labels.clone();
    let std_errors = ensemble
        .std_errors
        .clone()
        .expect("n_traj >= 2 guarantees standard errors");

    let mut oracle_values = Vec::with_capacity(oracle_series.len());
    for (_, rho) in &oracle_series {
        let row: Vec<f64> = model
            .observables()
            .iter()
            .map(|(_, op)| rho.expectation(op).re)
            .collect();
        oracle_values.push(row);
    }

    let mut per_observable = Vec::with_capacity(labels.len());
    let mut all_pass = true;
    for (k, label) in labels.iter().enumerate() {
        let mut max_abs_diff = 0.0f64;
        let mut max_allowed = 0.0f64;
        let mut pass = true;
        for t_idx in 0..oracle_values.len() {
            let diff = (oracle_values[t_idx][k] - ensemble.means[t_idx][k]).abs();
            let allowed = 5.0 * std_errors[t_idx][k] + allowance;
            // >= so max_allowed always holds the band at an attained
            // maximum, even when every difference is exactly zero.
            if diff >= max_abs_diff {
                max_abs_diff = diff;
                max_allowed = allowed;
            }
            if diff > allowed {
                pass = false;
            }
        }
        all_pass &= pass;
        per_observable.push(ObservableComparison {
            label: label.clone(),
            max_abs_diff,
            max_allowed,
            pass,
        });
    }

    Ok(ComparisonReport {
        times: ensemble.times,
        labels,
        oracle_values,
        ensemble_means: ensemble.means,
        std_errors,
        allowance,
        per_observable,
        pass: all_pass,
    })
}

#[cfg(test)]
mod tests;

//! The feedback master equation as a dense superoperator:
//!
//! ρ̇ = −i[H,ρ] + e^{−iZ} c ρ c† e^{iZ} − ½{c†c, ρ}
//!
//! i.e. a Lindblad equation whose jump operator is the rotated collapse
//! operator e^{−iZ}c. Superoperators act on column-stacked density matrices
//! (see [`crate::linalg::vectorize_operator`]), so vec(AρB) = (Bᵀ⊗A)vec(ρ).

use alloc::format;
use alloc::vec::Vec;

use crate::linalg::{
    mat_vec, unvectorize_operator, vec_norm, vectorize_operator, Complex64, DensityMatrix,
    Operator, ZERO,
};
use crate::model::{IntegrationConfig, SystemModel};
use crate::{Error, Result};

/// Dense D²×D² generator acting on vectorized density matrices.
#[derive(Clone, Debug)]
pub struct Superoperator {
    sys_dim: usize,
    matrix: Operator,
}

impl Superoperator {
    pub fn from_matrix(sys_dim: usize, matrix: Operator) -> Self {
        assert_eq!(matrix.dim(), sys_dim * sys_dim);
        Superoperator { sys_dim, matrix }
    }

    /// System Hilbert-space dimension D (the matrix is D²×D²).
    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    pub fn apply_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        mat_vec(&self.matrix, v)
    }

    /// ‖vec(I)† L‖∞ — zero (to roundoff) for any trace-preserving generator.
    pub fn trace_preservation_defect(&self) -> f64 {
        let d = self.sys_dim;
        let id_vec = vectorize_operator(&Operator::identity(d));
        let mut worst = 0.0f64;
        for col in 0..d * d {
            let mut acc = ZERO;
            for row in 0..d * d {
                acc += id_vec[row].conj() * self.matrix[(row, col)];
            }
            let mag = acc.norm();
            if mag > worst {
                worst = mag;
            }
        }
        worst
    }
}

/// Builds the generator of the feedback master equation for a validated
/// model.
pub fn build_feedback_liouvillian(model: &SystemModel) -> Result<Superoperator> {
    let violations = model.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidModel(violations));
    }
    let d = model.dim();
    let identity = Operator::identity(d);
    let h = model.hamiltonian();
    let c = model.collapse();
    let jump = &model.feedback_unitary()? * c;
    let cc = &c.dagger() * c;

    let minus_i = Complex64::new(0.0, -1.0);
    let half = Complex64::new(0.5, 0.0);

    // −i(Hρ − ρH)
    let hamiltonian_part =
        (&identity.kron(h) - &h.transpose().kron(&identity)).scale(minus_i);
    // (e^{−iZ}c) ρ (e^{−iZ}c)†
    let jump_part = jump.conjugate().kron(&jump);
    // −½(c†c ρ + ρ c†c)
    let damping_part =
        (&identity.kron(&cc) + &cc.transpose().kron(&identity)).scale(-half);

    let matrix = &(&hamiltonian_part + &jump_part) + &damping_part;
    Ok(Superoperator::from_matrix(d, matrix))
}

/// dρ/dt for a given state (Hermitian and traceless for valid input).
pub fn apply_liouvillian(l: &Superoperator, rho: &DensityMatrix) -> Result<Operator> {
    if rho.dim() != l.sys_dim() {
        return Err(Error::DimensionMismatch { expected: l.sys_dim(), found: rho.dim() });
    }
    unvectorize_operator(&l.apply_vec(&vectorize_operator(rho.operator())))
}

/// Classical fixed-step RK4 on the vectorized equation. Records the state
/// every `record_every` steps (always including t = 0 and t_final) and
/// aborts if trace or positivity drift beyond tolerance, which signals a
/// step size too large for the generator.
pub fn evolve(
    l: &Superoperator,
    rho0: &DensityMatrix,
    cfg: &IntegrationConfig,
) -> Result<Vec<(f64, DensityMatrix)>> {
    if rho0.dim() != l.sys_dim() {
        return Err(Error::DimensionMismatch { expected: l.sys_dim(), found: rho0.dim() });
    }
    let n_steps = cfg.n_steps();
    let mut v = vectorize_operator(rho0.operator());
    let mut out = Vec::with_capacity(n_steps / cfg.record_every + 2);
    out.push((0.0, rho0.clone()));

    for step in 0..n_steps {
        v = rk4_step(l, &v, cfg.dt);
        let recorded = (step + 1) % cfg.record_every == 0 || step + 1 == n_steps;
        if recorded {
            let t = (step + 1) as f64 * cfg.dt;
            let op = unvectorize_operator(&v)?;
            let rho = DensityMatrix::new_with_positivity_floor(op, -1e-6).map_err(|e| {
                Error::InvariantBreach(format!(
                    "state at t={t} invalid ({e}); dt={} is likely too large",
                    cfg.dt
                ))
            })?;
            out.push((t, rho));
        }
    }
    Ok(out)
}

fn rk4_step(l: &Superoperator, v: &[Complex64], dt: f64) -> Vec<Complex64> {
    let k1 = l.apply_vec(v);
    let k2 = l.apply_vec(&axpy(v, &k1, dt / 2.0));
    let k3 = l.apply_vec(&axpy(v, &k2, dt / 2.0));
    let k4 = l.apply_vec(&axpy(v, &k3, dt));
    let mut out = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        out.push(v[i] + (k1[i] + (k2[i] + k3[i]).scale(2.0) + k4[i]).scale(dt / 6.0));
    }
    out
}

fn axpy(v: &[Complex64], k: &[Complex64], factor: f64) -> Vec<Complex64> {
    v.iter().zip(k).map(|(a, b)| a + b.scale(factor)).collect()
}

/// Unique fixed point of the generator, found as its null vector, then
/// Hermitian-symmetrized and rescaled to unit trace. A multidimensional
/// null space is reported, never silently resolved.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    let v = l.matrix.null_vector()?;
    let raw = unvectorize_operator(&v)?;
    let symmetrized = crate::linalg::symmetrize(&raw);
    let trace = symmetrized.trace();
    if trace.norm() < 1e-10 {
        return Err(Error::InvariantBreach(format!(
            "null vector has trace {:e}; cannot normalize to a state",
            trace.norm()
        )));
    }
    let rho = symmetrized.scale(Complex64::new(1.0, 0.0) / trace);
    let residual = vec_norm(&l.apply_vec(&vectorize_operator(&rho)));
    if residual > 1e-8 {
        return Err(Error::NoNullVector { smallest_singular: residual });
    }
    DensityMatrix::new(rho)
}

/// Adjoint generator under the trace pairing Tr(s · L(ρ)) = Tr(L†(s) · ρ):
/// L† = S Lᵀ S with S the vec-transpose (commutation) matrix. Acting on a
/// vectorized observable this is the Heisenberg-picture generator
/// s ↦ i[H,s] + c† e^{iZ} s e^{−iZ} c − ½{c†c, s}.
pub fn adjoint_liouvillian(l: &Superoperator) -> Superoperator {
    let d = l.sys_dim();
    let swap = commutation_matrix(d);
    let adjoint = &(&swap * &l.matrix.transpose()) * &swap;
    Superoperator::from_matrix(d, adjoint)
}

/// Permutation with S·vec(A) = vec(Aᵀ).
fn commutation_matrix(d: usize) -> Operator {
    let mut s = Operator::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            // vec(A)[j*d+i] = A[i][j] lands at vec(Aᵀ)[i*d+j].
            s[(i * d + j, j * d + i)] = Complex64::new(1.0, 0.0);
        }
    }
    s
}

/// d⟨s⟩/dt = Tr(s · dρ/dt) for the model's generator.
pub fn moment_rhs(l: &Superoperator, s: &Operator, rho: &DensityMatrix) -> Result<Complex64> {
    if s.dim() != l.sys_dim() {
        return Err(Error::DimensionMismatch { expected: l.sys_dim(), found: s.dim() });
    }
    let drho = apply_liouvillian(l, rho)?;
    Ok((s * &drho).trace())
}

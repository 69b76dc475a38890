//! Dense complex matrix kernel: construction, adjoints, products, Kronecker
//! products, matrix exponentials, Hermitian eigensolves, null spaces, and
//! the column-stacking vectorization used by the superoperator layer.
//!
//! Everything here is double precision and operates on immutable inputs;
//! all functions are pure.

mod eigen;
mod expm;
mod lu;

pub use eigen::hermitian_eigen;
pub use lu::lu_solve;

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

// Needed for f64 methods in no_std builds; shadowed by inherent methods otherwise.
#[allow(unused_imports)]
use num_traits::Float;

pub type Complex64 = num_complex::Complex<f64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense complex square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<Complex64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "operator dimension must be >= 1");
        Operator { dim, entries: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Operator::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Build from row-major complex entries; panics if `entries` is not dim².
    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(entries.len(), dim * dim, "entries must be dim x dim");
        assert!(dim >= 1);
        Operator { dim, entries }
    }

    /// Build from rows of (re, im) pairs, mainly for tests and config parsing.
    pub fn from_rows(rows: &[&[(f64, f64)]]) -> Self {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "rows must form a square matrix");
            for &(re, im) in *row {
                entries.push(Complex64::new(re, im));
            }
        }
        Operator::from_entries(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn dagger(&self) -> Operator {
        let d = self.dim;
        let mut out = Operator::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = self[(j, i)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Operator {
        let d = self.dim;
        let mut out = Operator::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = self[(j, i)];
            }
        }
        out
    }

    pub fn conjugate(&self) -> Operator {
        let mut out = self.clone();
        for z in &mut out.entries {
            *z = z.conj();
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> Operator {
        let mut out = self.clone();
        for z in &mut out.entries {
            *z *= factor;
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Largest entrywise |A − A†|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest entrywise |A − B|; panics on dimension mismatch.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.dim {
            let col: f64 = (0..self.dim).map(|i| self[(i, j)].norm()).sum();
            worst = worst.max(col);
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        assert_eq!(self.dim, v.dim());
        let mut out = vec![ZERO; self.dim];
        for i in 0..self.dim {
            let mut acc = ZERO;
            for j in 0..self.dim {
                acc += self[(i, j)] * v.amplitudes()[j];
            }
            out[i] = acc;
        }
        StateVector::from_amplitudes(out)
    }

    /// Standard Kronecker product; `self` owns the coarse (leading) index.
    pub fn kron(&self, other: &Operator) -> Operator {
        let (da, db) = (self.dim, other.dim);
        let d = da * db;
        let mut out = Operator::zeros(d);
        for ia in 0..da {
            for ja in 0..da {
                let a = self[(ia, ja)];
                if a == ZERO {
                    continue;
                }
                for ib in 0..db {
                    for jb in 0..db {
                        out[(ia * db + ib, ja * db + jb)] = a * other[(ib, jb)];
                    }
                }
            }
        }
        out
    }

    /// Scaling-and-squaring matrix exponential; see [`expm`].
    pub fn matrix_exp(&self) -> crate::Result<Operator> {
        expm::matrix_exp(self)
    }

    /// Smallest eigenvalue of a Hermitian matrix.
    pub fn min_eigenvalue(&self) -> crate::Result<f64> {
        if self.hermiticity_defect() > 1e-8 {
            return Err(crate::Error::NotHermitian {
                what: "min_eigenvalue input",
                defect: self.hermiticity_defect(),
            });
        }
        let (values, _) = hermitian_eigen(self)?;
        Ok(values[0])
    }

    /// Unit vector v with ‖Av‖ ≤ 1e−8, found as the smallest singular vector
    /// (via the Hermitian eigenproblem of A†A) refined by inverse iteration.
    /// Errors if no vector reaches tolerance, or if the numerical null space
    /// has dimension > 1.
    pub fn null_vector(&self) -> crate::Result<Vec<Complex64>> {
        let gram = &self.dagger() * self;
        let (values, vectors) = hermitian_eigen(&gram)?;
        let scale = self.frobenius_norm().max(1.0);
        // Singular values from the Gram eigenvalues; negatives are roundoff.
        let singulars: Vec<f64> = values.iter().map(|&l| l.max(0.0).sqrt()).collect();
        let degenerate = singulars.iter().filter(|&&s| s <= 1e-7 * scale).count();
        if degenerate > 1 {
            return Err(crate::Error::DegenerateNullSpace { dimension: degenerate });
        }
        let mut v: Vec<Complex64> = (0..self.dim).map(|i| vectors[(i, 0)]).collect();
        // Inverse iteration sharpens the residual down to roundoff in A itself.
        for _ in 0..2 {
            if let Ok(x) = lu::lu_solve(self, &v) {
                let norm = vec_norm(&x);
                if norm.is_finite() && norm > 0.0 {
                    v = x.iter().map(|z| z / norm).collect();
                }
            }
        }
        let residual = vec_norm(&mat_vec(self, &v));
        if residual > 1e-8 {
            return Err(crate::Error::NoNullVector { smallest_singular: residual });
        }
        Ok(v)
    }
}

impl core::ops::Index<(usize, usize)> for Operator {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim);
        let entries = self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect();
        Operator { dim: self.dim, entries }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim);
        let entries = self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect();
        Operator { dim: self.dim, entries }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator product dimension mismatch");
        let d = self.dim;
        let mut out = Operator::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

/// ab − ba.
pub fn commutator(a: &Operator, b: &Operator) -> crate::Result<Operator> {
    if a.dim() != b.dim() {
        return Err(crate::Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(&(a * b) - &(b * a))
}

/// ab + ba.
pub fn anticommutator(a: &Operator, b: &Operator) -> crate::Result<Operator> {
    if a.dim() != b.dim() {
        return Err(crate::Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(&(a * b) + &(b * a))
}

/// Column-stacking vectorization: vec(A)[j*D + i] = A[i][j], i.e. the columns
/// of A are stacked top to bottom. The inverse is [`unvectorize_operator`].
/// Under this convention vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ).
pub fn vectorize_operator(a: &Operator) -> Vec<Complex64> {
    let d = a.dim();
    let mut v = Vec::with_capacity(d * d);
    for j in 0..d {
        for i in 0..d {
            v.push(a[(i, j)]);
        }
    }
    v
}

pub fn unvectorize_operator(v: &[Complex64]) -> crate::Result<Operator> {
    let d = integer_sqrt(v.len()).ok_or(crate::Error::NotPerfectSquare { len: v.len() })?;
    let mut out = Operator::zeros(d);
    for j in 0..d {
        for i in 0..d {
            out[(i, j)] = v[j * d + i];
        }
    }
    Ok(out)
}

fn integer_sqrt(n: usize) -> Option<usize> {
    if n == 0 {
        return None;
    }
    let mut r = (n as f64).sqrt().round() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    (r * r == n).then_some(r)
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn mat_vec(a: &Operator, v: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.dim(), v.len());
    let d = a.dim();
    let mut out = vec![ZERO; d];
    for i in 0..d {
        let mut acc = ZERO;
        for j in 0..d {
            acc += a[(i, j)] * v[j];
        }
        out[i] = acc;
    }
    out
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Self {
        assert!(!amplitudes.is_empty());
        StateVector { amplitudes }
    }

    /// Computational basis state |index⟩.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim);
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        StateVector { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    pub fn normalize(&mut self) -> crate::Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(crate::Error::InvariantBreach(alloc::format!(
                "cannot normalize state with norm {n}"
            )));
        }
        for z in &mut self.amplitudes {
            *z /= n;
        }
        Ok(())
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        assert_eq!(self.dim(), other.dim());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// ⟨ψ|A|ψ⟩.
    pub fn expectation(&self, a: &Operator) -> Complex64 {
        self.inner(&a.apply(self))
    }

    /// |ψ⟩⟨ψ| as a density matrix.
    pub fn projector(&self) -> Operator {
        let d = self.dim();
        let mut out = Operator::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        out
    }
}

/// Hermitian, unit-trace, positive-semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    /// Wraps an operator after checking Hermiticity (1e−10), unit trace
    /// (1e−8) and positivity (min eigenvalue ≥ −1e−8).
    pub fn new(op: Operator) -> crate::Result<Self> {
        let h = op.hermiticity_defect();
        if h > 1e-10 {
            return Err(crate::Error::NotHermitian { what: "density matrix", defect: h });
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(crate::Error::InvariantBreach(alloc::format!(
                "density matrix trace {} + {}i is not 1",
                tr.re, tr.im
            )));
        }
        let symmetrized = symmetrize(&op);
        let min = symmetrized.min_eigenvalue()?;
        if min < -1e-8 {
            return Err(crate::Error::InvariantBreach(alloc::format!(
                "density matrix min eigenvalue {min:e} below -1e-8"
            )));
        }
        Ok(DensityMatrix { op })
    }

    /// Like [`DensityMatrix::new`] with a caller-supplied positivity floor,
    /// for integrators that track a looser bound.
    pub fn new_with_positivity_floor(op: Operator, floor: f64) -> crate::Result<Self> {
        let h = op.hermiticity_defect();
        if h > 1e-10 {
            return Err(crate::Error::NotHermitian { what: "density matrix", defect: h });
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(crate::Error::InvariantBreach(alloc::format!(
                "density matrix trace {} + {}i is not 1",
                tr.re, tr.im
            )));
        }
        let min = symmetrize(&op).min_eigenvalue()?;
        if min < floor {
            return Err(crate::Error::InvariantBreach(alloc::format!(
                "density matrix min eigenvalue {min:e} below {floor:e}"
            )));
        }
        Ok(DensityMatrix { op })
    }

    pub fn pure(psi: &StateVector) -> crate::Result<Self> {
        let mut psi = psi.clone();
        psi.normalize()?;
        Ok(DensityMatrix { op: psi.projector() })
    }

    /// Maximally mixed state I/D.
    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            op: Operator::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn expectation(&self, a: &Operator) -> Complex64 {
        (a * &self.op).trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.op * &self.op).trace().re
    }

    /// (1/2) Σ singular values of ρ₁ − ρ₂. For Hermitian differences this is
    /// half the sum of |eigenvalues|.
    pub fn trace_distance(&self, other: &DensityMatrix) -> crate::Result<f64> {
        if self.dim() != other.dim() {
            return Err(crate::Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = symmetrize(&(&self.op - &other.op));
        let (values, _) = hermitian_eigen(&diff)?;
        Ok(0.5 * values.iter().map(|v| v.abs()).sum::<f64>())
    }

    /// Spectral decomposition (probabilities, pure states), discarding
    /// eigenvalues below 1e−12. Used for sampling mixed initial states.
    pub fn eigendecompose(&self) -> crate::Result<Vec<(f64, StateVector)>> {
        let (values, vectors) = hermitian_eigen(&symmetrize(&self.op))?;
        let d = self.dim();
        let mut out = Vec::new();
        for (idx, &p) in values.iter().enumerate() {
            if p > 1e-12 {
                let amps: Vec<Complex64> = (0..d).map(|i| vectors[(i, idx)]).collect();
                out.push((p, StateVector::from_amplitudes(amps)));
            }
        }
        Ok(out)
    }
}

/// (A + A†)/2.
pub fn symmetrize(a: &Operator) -> Operator {
    (a + &a.dagger()).scale(Complex64::new(0.5, 0.0))
}

// Pauli matrices and ladder operators, in the basis index 0 = excited,
// index 1 = ground (fixed convention for the whole crate).

pub fn sigma_x() -> Operator {
    Operator::from_rows(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]])
}

pub fn sigma_y() -> Operator {
    Operator::from_rows(&[&[(0.0, 0.0), (0.0, -1.0)], &[(0.0, 1.0), (0.0, 0.0)]])
}

pub fn sigma_z() -> Operator {
    Operator::from_rows(&[&[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (-1.0, 0.0)]])
}

/// σ₋ maps excited (index 0) to ground (index 1): σ₋|e⟩ = |g⟩.
pub fn sigma_minus() -> Operator {
    Operator::from_rows(&[&[(0.0, 0.0), (0.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]])
}

pub fn sigma_plus() -> Operator {
    sigma_minus().dagger()
}

/// Truncated Fock-space lowering operator: a|n⟩ = √n |n−1⟩.
pub fn lowering(dim: usize) -> Operator {
    let mut a = Operator::zeros(dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

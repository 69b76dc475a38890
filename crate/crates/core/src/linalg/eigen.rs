//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each sweep annihilates every off-diagonal pair (p, q) with a complex
//! Givens rotation: the phase of a_pq is absorbed first, then a real 2×2
//! Jacobi rotation zeroes the pair. Quadratic convergence sets in after a
//! couple of sweeps; matrices here are small (≤ ~1000), so no pivot
//! ordering tricks are needed.

use alloc::vec::Vec;

// Needed for f64 methods in no_std builds; shadowed by inherent methods otherwise.
#[allow(unused_imports)]
use num_traits::Float;

use super::{Complex64, Operator, ONE, ZERO};
use crate::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order and a unitary whose columns are
/// the matching eigenvectors: A V = V diag(values).
pub fn hermitian_eigen(a: &Operator) -> Result<(Vec<f64>, Operator)> {
    let n = a.dim();
    let mut m = a.clone();
    let mut v = Operator::identity(n);
    let scale = m.frobenius_norm().max(1.0);

    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&m);
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate_pair(&mut m, &mut v, p, q);
            }
        }
    }
    if off_diagonal_norm(&m) > 1e-12 * scale {
        return Err(Error::NonConvergence("Jacobi eigensolver"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());

    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Operator::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, new_col)] = v[(row, old_col)];
        }
    }
    Ok((values, vectors))
}

fn off_diagonal_norm(m: &Operator) -> f64 {
    let n = m.dim();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += m[(i, j)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// One complex Jacobi rotation on the (p, q) pair, updating both the working
/// matrix and the accumulated eigenvector matrix.
fn rotate_pair(m: &mut Operator, v: &mut Operator, p: usize, q: usize) {
    let apq = m[(p, q)];
    let beta = apq.norm();
    if beta == 0.0 {
        return;
    }
    let phase = apq / beta; // e^{i φ}
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;

    // After absorbing the phase into column q the 2x2 block is real
    // [[app, beta], [beta, aqq]]; pick tan of the rotation angle that
    // zeroes it (smaller root for stability).
    let theta = (aqq - app) / (2.0 * beta);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // Combined unitary restricted to (p, q): diag(1, e^{-i φ}) · G with G the
    // real rotation [[c, s], [-s, c]].
    let upp = Complex64::new(c, 0.0) * ONE;
    let upq = Complex64::new(s, 0.0);
    let uqp = -Complex64::new(s, 0.0) * phase.conj();
    let uqq = Complex64::new(c, 0.0) * phase.conj();

    let n = m.dim();
    // M <- U† M U: columns first, then rows.
    for i in 0..n {
        let mip = m[(i, p)];
        let miq = m[(i, q)];
        m[(i, p)] = mip * upp + miq * uqp;
        m[(i, q)] = mip * upq + miq * uqq;
    }
    for j in 0..n {
        let mpj = m[(p, j)];
        let mqj = m[(q, j)];
        m[(p, j)] = upp.conj() * mpj + uqp.conj() * mqj;
        m[(q, j)] = upq.conj() * mpj + uqq.conj() * mqj;
    }
    // Clean the pair that was just annihilated; Hermitian symmetry keeps the
    // mirror entry consistent.
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    let dp = m[(p, p)];
    let dq = m[(q, q)];
    m[(p, p)] = Complex64::new(dp.re, 0.0);
    m[(q, q)] = Complex64::new(dq.re, 0.0);

    for i in 0..v.dim() {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * upp + viq * uqp;
        v[(i, q)] = vip * upq + viq * uqq;
    }
}

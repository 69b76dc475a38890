//! Complex LU factorization with partial pivoting, used for the inverse
//! iteration inside the null-space solve. Near-zero pivots are nudged to
//! roundoff scale on purpose: inverse iteration against a singular matrix
//! is exactly what extracts the null vector.

use alloc::vec;
use alloc::vec::Vec;

// Needed for f64 methods in no_std builds; shadowed by inherent methods otherwise.
#[allow(unused_imports)]
use num_traits::Float;

use super::{Complex64, Operator, ZERO};
use crate::{Error, Result};

/// Solve A x = b via LU with partial pivoting.
pub fn lu_solve(a: &Operator, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let pivot_floor = 1e-300f64.max(1e-20 * a.norm_one());

    for col in 0..n {
        // Partial pivot.
        let mut best = col;
        let mut best_mag = lu[(col, col)].norm();
        for row in (col + 1)..n {
            let mag = lu[(row, col)].norm();
            if mag > best_mag {
                best = row;
                best_mag = mag;
            }
        }
        if best != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(best, j)];
                lu[(best, j)] = tmp;
            }
            perm.swap(col, best);
        }
        if lu[(col, col)].norm() < pivot_floor {
            lu[(col, col)] = Complex64::new(pivot_floor, 0.0);
        }
        let pivot = lu[(col, col)];
        for row in (col + 1)..n {
            let factor = lu[(row, col)] / pivot;
            lu[(row, col)] = factor;
            for j in (col + 1)..n {
                let sub = factor * lu[(col, j)];
                lu[(row, j)] -= sub;
            }
        }
    }

    // Forward substitution on the permuted right-hand side.
    let mut y = vec![ZERO; n];
    for i in 0..n {
        let mut acc = b[perm[i]];
        for j in 0..i {
            acc -= lu[(i, j)] * y[j];
        }
        y[i] = acc;
    }
    // Back substitution.
    let mut x = vec![ZERO; n];
    for i in (0..n).rev() {
        let mut acc = y[i];
        for j in (i + 1)..n {
            acc -= lu[(i, j)] * x[j];
        }
        x[i] = acc / lu[(i, i)];
    }
    Ok(x)
}

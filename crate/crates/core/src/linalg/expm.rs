//! Matrix exponential by scaling and squaring with a Taylor-series core.
//!
//! The input is scaled by 2^{-s} until its 1-norm is below 1/2, the series
//! is summed to machine precision, and the result is squared s times. This
//! is the reference path for all generators in the crate (e^{-iZ}, the
//! collision-model unitaries, ...); inputs need not be Hermitian or small.

// Needed for f64 methods in no_std builds; shadowed by inherent methods otherwise.
#[allow(unused_imports)]
use num_traits::Float;

use super::{Complex64, Operator};
use crate::{Error, Result};

const MAX_SQUARINGS: u32 = 64;
const MAX_TERMS: usize = 64;

pub fn matrix_exp(a: &Operator) -> Result<Operator> {
    let norm = a.norm_one();
    if !norm.is_finite() {
        return Err(Error::NonConvergence("matrix exponential of non-finite input"));
    }
    let squarings = if norm <= 0.5 {
        0
    } else {
        let s = (norm / 0.5).log2().ceil() as u32;
        if s > MAX_SQUARINGS {
            return Err(Error::NonConvergence(
                "matrix exponential: scaling/squaring depth exhausted",
            ));
        }
        s
    };

    let scaled = a.scale(Complex64::new(0.5f64.powi(squarings as i32), 0.0));
    let mut result = taylor_core(&scaled)?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}

fn taylor_core(a: &Operator) -> Result<Operator> {
    let d = a.dim();
    let mut sum = Operator::identity(d);
    let mut term = Operator::identity(d);
    for k in 1..=MAX_TERMS {
        term = &term * a;
        term = term.scale(Complex64::new(1.0 / k as f64, 0.0));
        sum = &sum + &term;
        if term.norm_one() < 1e-17 * sum.norm_one().max(1.0) {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence("matrix exponential Taylor series"))
}

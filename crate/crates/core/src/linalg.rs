//! Small dense-vector helpers and a power method for implicit operators.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::substream;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Returns `a / ‖a‖₂`, or an error for the zero vector.
pub fn normalized(a: &[f64]) -> Result<Vec<f64>> {
    let nrm = norm(a);
    if !nrm.is_finite() {
        return Err(Error::NonFinite("normalization"));
    }
    if nrm == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(a.iter().map(|x| x / nrm).collect())
}

pub fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Unit vector with uniformly random entries before normalization, reproducible from `seed`.
pub fn random_unit(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = substream(seed, 0x9f1d);
    loop {
        let v: Vec<f64> = (0..len).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        if let Ok(u) = normalized(&v) {
            return u;
        }
    }
}

/// Leading singular triple found by the power method.
#[derive(Debug, Clone)]
pub struct SingularTriple {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub sigma: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power method on an operator given by `apply` (`A y`) and `apply_t` (`Aᵀ x`).
///
/// Alternates `x = A y`, `y = Aᵀ x` from `start` (length of the right side)
/// and stops once the singular-value estimate changes by less than
/// `rel_tol` relative to itself, or after `max_iters` rounds.
pub fn power_method<A, At>(
    apply: A,
    apply_t: At,
    start: Vec<f64>,
    max_iters: usize,
    rel_tol: f64,
) -> Result<SingularTriple>
where
    A: Fn(&[f64]) -> Vec<f64>,
    At: Fn(&[f64]) -> Vec<f64>,
{
    let mut right = normalized(&start)?;
    let mut left = Vec::new();
    let mut sigma = 0.0f64;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=max_iters.max(1) {
        iterations = it;
        let x = apply(&right);
        let sx = norm(&x);
        if !sx.is_finite() {
            return Err(Error::NonFinite("power iteration"));
        }
        if sx == 0.0 {
            return Err(Error::ZeroVector);
        }
        left = x.into_iter().map(|v| v / sx).collect();
        let y = apply_t(&left);
        let sy = norm(&y);
        if sy == 0.0 {
            return Err(Error::ZeroVector);
        }
        right = y.into_iter().map(|v| v / sy).collect();

        let prev = sigma;
        sigma = sy;
        if it > 1 && (sigma - prev).abs() <= rel_tol * sigma {
            converged = true;
            break;
        }
    }
    Ok(SingularTriple { left, right, sigma, iterations, converged })
}

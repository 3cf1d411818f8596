//! Dense vector helpers plus matrix-free power iteration and conjugate gradient.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("power iteration did not converge after {iters} iterations (residual {residual:e})")]
    PowerIteration { iters: usize, residual: f64 },
    #[error("conjugate gradient did not converge after {iters} iterations (residual {residual:e})")]
    ConjugateGradient { iters: usize, residual: f64 },
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(alpha: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, Copy)]
pub struct PowerIterOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PowerIterOptions {
    fn default() -> Self {
        PowerIterOptions { tol: 1e-9, max_iters: 10_000 }
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite operator.
/// `apply(v, out)` must add `A v` into the zeroed buffer `out`. Stops when the Rayleigh quotient changes by at most
/// `tol * lambda` between sweeps.
pub fn power_iteration<F>(dim: usize, mut apply: F, opts: PowerIterOptions) -> Result<f64, LinalgError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = norm_sq(&v).sqrt();
    scale(1.0 / nv, &mut v);
    let mut w = vec![0.0; dim];

    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for it in 0..opts.max_iters {
        w.iter_mut().for_each(|x| *x = 0.0);
        apply(&v, &mut w);
        let next = dot(&v, &w);
        residual = w.iter().zip(&v).map(|(a, b)| (a - next * b).powi(2)).sum::<f64>().sqrt();
        let nw = norm_sq(&w).sqrt();
        if nw == 0.0 {
            // operator annihilates v; for PSD input that means the zero operator
            return Ok(0.0);
        }
        if it > 0 && (next - lambda).abs() <= opts.tol * next.abs() {
            return Ok(next);
        }
        lambda = next;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    Err(LinalgError::PowerIteration { iters: opts.max_iters, residual })
}

/// Solves `A x = b` for symmetric positive definite `A` given as `apply`.
/// Terminates when `||b - A x|| <= tol`.
pub fn conjugate_gradient<F>(
    b: &[f64],
    x0: Option<&[f64]>,
    mut apply: F,
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, usize), LinalgError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let dim = b.len();
    let mut x = x0.map_or_else(|| vec![0.0; dim], <[f64]>::to_vec);
    let mut ap = vec![0.0; dim];
    apply(&x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rs = norm_sq(&r);

    for it in 0..max_iters {
        if rs.sqrt() <= tol {
            return Ok((x, it));
        }
        ap.iter_mut().for_each(|v| *v = 0.0);
        apply(&p, &mut ap);
        let alpha = rs / dot(&p, &ap);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rs_new = norm_sq(&r);
        let beta = rs_new / rs;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rs = rs_new;
    }
    if rs.sqrt() <= tol {
        return Ok((x, max_iters));
    }
    Err(LinalgError::ConjugateGradient { iters: max_iters, residual: rs.sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_apply(m: &[Vec<f64>]) -> impl FnMut(&[f64], &mut [f64]) + '_ {
        move |v, out| {
            for (o, row) in out.iter_mut().zip(m) {
                *o += dot(row, v);
            }
        }
    }

    #[test]
    fn power_iteration_diagonal() {
        let m = vec![vec![1.0, 0.0, 0.0], vec![0.0, 5.0, 0.0], vec![0.0, 0.0, 2.0]];
        let l = power_iteration(3, dense_apply(&m), PowerIterOptions::default()).unwrap();
        assert!((l - 5.0).abs() < 1e-8);
    }

    #[test]
    fn power_iteration_zero_operator() {
        let l = power_iteration(4, |_, _| {}, PowerIterOptions::default()).unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn power_iteration_cap_reports_residual() {
        // nearly degenerate top pair converges slowly
        let m = vec![vec![1.0, 0.0], vec![0.0, 0.999]];
        let err = power_iteration(2, dense_apply(&m), PowerIterOptions { tol: 1e-15, max_iters: 5 });
        assert!(matches!(err, Err(LinalgError::PowerIteration { iters: 5, .. })));
    }

    #[test]
    fn cg_solves_spd_system() {
        let m = vec![vec![4.0, 1.0], vec![1.0, 3.0]];
        let (x, _) = conjugate_gradient(&[1.0, 2.0], None, dense_apply(&m), 1e-12, 100).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-12);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn cg_iteration_cap() {
        let m = vec![vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]];
        let err = conjugate_gradient(&[1.0, 2.0, 3.0], None, dense_apply(&m), 1e-14, 1);
        assert!(matches!(err, Err(LinalgError::ConjugateGradient { iters: 1, .. })));
    }
}

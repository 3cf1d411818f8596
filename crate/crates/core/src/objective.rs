//! Ridge and logistic finite-sum objectives `f(x) = (1/n) sum_i f_i(x)`.
//!
//! Each component carries the full regularizer:
//!
//! * ridge: `f_i(x) = 1/2 (a_i^T x - b_i)^2 + lambda/2 ||x||^2`
//! * logistic: `f_i(x) = 1/2 log(1 + exp(b_i a_i^T x)) + lambda/2 ||x||^2`
//!
//! The logistic loss is taken exactly as written above, with `+b_i` in the
//! exponent. It is convex and smooth either way; only the sign convention of
//! the labels differs from the textbook form.

use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::dataset::{Dataset, Partitioning};
use crate::linalg::{self, LinalgError, PowerIterOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("regularization must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("component index {index} out of range (n = {n})")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("point has dimension {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("reference solve failed after {iters} iterations (gradient norm {residual:e})")]
    SolveFailed { iters: usize, residual: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Ridge,
    Logistic,
}

impl FromStr for ObjectiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ridge" => Ok(ObjectiveKind::Ridge),
            "logistic" => Ok(ObjectiveKind::Logistic),
            other => Err(format!("unknown objective `{other}` (expected ridge|logistic)")),
        }
    }
}

/// `log(1 + exp(z))` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
pub struct Objective {
    kind: ObjectiveKind,
    lambda: f64,
    data: Arc<Dataset>,
    row_norms_sq: Vec<f64>,
}

impl Objective {
    pub fn new(kind: ObjectiveKind, lambda: f64, data: Arc<Dataset>) -> Result<Self, ObjectiveError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(ObjectiveError::NonPositiveLambda(lambda));
        }
        let row_norms_sq = data.rows().iter().map(|r| r.norm_sq()).collect();
        Ok(Objective { kind, lambda, data, row_norms_sq })
    }

    pub fn ridge(lambda: f64, data: Arc<Dataset>) -> Result<Self, ObjectiveError> {
        Self::new(ObjectiveKind::Ridge, lambda, data)
    }

    pub fn logistic(lambda: f64, data: Arc<Dataset>) -> Result<Self, ObjectiveError> {
        Self::new(ObjectiveKind::Logistic, lambda, data)
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn d(&self) -> usize {
        self.data.d()
    }

    pub fn row_norms_sq(&self) -> &[f64] {
        &self.row_norms_sq
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ObjectiveError> {
        if x.len() != self.d() {
            return Err(ObjectiveError::DimensionMismatch { got: x.len(), expected: self.d() });
        }
        Ok(())
    }

    /// Loss part of `f_i` (without the regularizer).
    #[inline]
    fn component_loss(&self, i: usize, x: &[f64]) -> f64 {
        let z = self.data.row(i).dot(x);
        let b = self.data.labels()[i];
        match self.kind {
            ObjectiveKind::Ridge => 0.5 * (z - b) * (z - b),
            ObjectiveKind::Logistic => 0.5 * softplus(b * z),
        }
    }

    /// Derivative of the loss part of `f_i` with respect to `a_i^T x`.
    #[inline]
    fn loss_slope(&self, i: usize, x: &[f64]) -> f64 {
        let z = self.data.row(i).dot(x);
        let b = self.data.labels()[i];
        match self.kind {
            ObjectiveKind::Ridge => z - b,
            ObjectiveKind::Logistic => 0.5 * b * sigmoid(b * z),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let n = self.n() as f64;
        let loss: f64 = (0..self.n()).map(|i| self.component_loss(i, x)).sum();
        loss / n + 0.5 * self.lambda * linalg::norm_sq(x)
    }

    pub fn component_value(&self, i: usize, x: &[f64]) -> Result<f64, ObjectiveError> {
        self.check_index(i)?;
        self.check_dim(x)?;
        Ok(self.component_loss(i, x) + 0.5 * self.lambda * linalg::norm_sq(x))
    }

    fn check_index(&self, i: usize) -> Result<(), ObjectiveError> {
        if i >= self.n() {
            return Err(ObjectiveError::IndexOutOfRange { index: i, n: self.n() });
        }
        Ok(())
    }

    /// `grad f_i(x)`.
    pub fn component_gradient(&self, i: usize, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        self.check_index(i)?;
        self.check_dim(x)?;
        let mut g = vec![0.0; self.d()];
        self.component_gradient_into(i, x, &mut g);
        Ok(g)
    }

    /// Writes `grad f_i(x)` into `out`. Panics if `i` is out of range.
    #[inline]
    pub fn component_gradient_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = self.lambda * xi;
        }
        let s = self.loss_slope(i, x);
        self.data.row(i).axpy_into(s, out);
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n() as f64;
        let mut g = vec![0.0; self.d()];
        for i in 0..self.n() {
            let s = self.loss_slope(i, x);
            self.data.row(i).axpy_into(s / n, &mut g);
        }
        linalg::axpy(self.lambda, x, &mut g);
        g
    }

    /// Per-row curvature weight: sup of the loss' second derivative in `a_i^T x`.
    fn curvature_weight(&self, i: usize) -> f64 {
        match self.kind {
            ObjectiveKind::Ridge => 1.0,
            // d^2/dz^2 of 1/2 softplus(b z) is at most b^2 / 8
            ObjectiveKind::Logistic => {
                let b = self.data.labels()[i];
                b * b / 8.0
            }
        }
    }

    /// Largest eigenvalue of `(1/|S|) sum_{i in S} w_i a_i a_i^T`.
    fn spectral_term(&self, set: &[usize]) -> Result<f64, ObjectiveError> {
        let m = set.len() as f64;
        let weights: Vec<f64> = set.iter().map(|&i| self.curvature_weight(i)).collect();
        let apply = |v: &[f64], out: &mut [f64]| {
            for (&i, &w) in set.iter().zip(&weights) {
                let row = self.data.row(i);
                row.axpy_into(w * row.dot(v) / m, out);
            }
        };
        Ok(linalg::power_iteration(self.d(), apply, PowerIterOptions::default())?)
    }

    pub fn smoothness_profile(&self, part: &Partitioning) -> Result<SmoothnessProfile, ObjectiveError> {
        let lambda = self.lambda;
        let l_i: Vec<f64> = (0..self.n()).map(|i| self.curvature_weight(i) * self.row_norms_sq[i] + lambda).collect();
        let all: Vec<usize> = (0..self.n()).collect();
        let l = self.spectral_term(&all)? + lambda;

        let mut l_c = Vec::with_capacity(part.num_blocks());
        let mut lmax_c = Vec::with_capacity(part.num_blocks());
        let mut lbar_c = Vec::with_capacity(part.num_blocks());
        for set in part.sets() {
            let lc = if set.len() == self.n() { l } else { self.spectral_term(set)? + lambda };
            l_c.push(lc);
            lmax_c.push(set.iter().map(|&i| l_i[i]).fold(f64::NEG_INFINITY, f64::max));
            lbar_c.push(set.iter().map(|&i| l_i[i]).sum::<f64>() / set.len() as f64);
        }
        Ok(SmoothnessProfile { l_i, l, l_c, lmax_c, lbar_c, mu: lambda })
    }

    /// Reference minimizer `x*`. Ridge solves the normal equations by conjugate
    /// gradient; logistic runs full-batch gradient descent with step `1/L`.
    /// Either way the returned point has `||grad f(x*)|| <= tol`.
    pub fn solve_reference(&self, tol: f64) -> Result<Vec<f64>, ObjectiveError> {
        let d = self.d();
        match self.kind {
            ObjectiveKind::Ridge => {
                let n = self.n() as f64;
                let mut rhs = vec![0.0; d];
                for (row, &b) in self.data.rows().iter().zip(self.data.labels()) {
                    row.axpy_into(b / n, &mut rhs);
                }
                let lambda = self.lambda;
                let apply = |v: &[f64], out: &mut [f64]| {
                    for row in self.data.rows() {
                        row.axpy_into(row.dot(v) / n, out);
                    }
                    linalg::axpy(lambda, v, out);
                };
                let cap = (10 * d).max(1000);
                let (x, _) = linalg::conjugate_gradient(&rhs, None, apply, tol, cap).map_err(|e| match e {
                    LinalgError::ConjugateGradient { iters, residual } => {
                        ObjectiveError::SolveFailed { iters, residual }
                    }
                    other => other.into(),
                })?;
                Ok(x)
            }
            ObjectiveKind::Logistic => {
                let all: Vec<usize> = (0..self.n()).collect();
                let l = self.spectral_term(&all)? + self.lambda;
                let step = 1.0 / l;
                let mut x = vec![0.0; d];
                let cap = 1_000_000;
                let mut gnorm = f64::INFINITY;
                for _ in 0..cap {
                    let g = self.gradient(&x);
                    gnorm = linalg::norm_sq(&g).sqrt();
                    if gnorm <= tol {
                        return Ok(x);
                    }
                    linalg::axpy(-step, &g, &mut x);
                }
                Err(ObjectiveError::SolveFailed { iters: cap, residual: gnorm })
            }
        }
    }
}

/// Smoothness and strong-convexity constants of an objective over a partitioning.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SmoothnessProfile {
    /// `L_i` per component.
    pub l_i: Vec<f64>,
    /// Smoothness of `f`.
    pub l: f64,
    /// Smoothness of each block mean `f_Cj`.
    pub l_c: Vec<f64>,
    /// `max_{i in C_j} L_i`.
    pub lmax_c: Vec<f64>,
    /// Mean of `L_i` over each block; diagnostic only.
    pub lbar_c: Vec<f64>,
    pub mu: f64,
}

impl SmoothnessProfile {
    pub fn l_max(&self) -> f64 {
        self.l_i.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;

    fn ds(rows: &[Vec<f64>], b: &[f64]) -> Arc<Dataset> {
        Arc::new(Dataset::from_dense(rows, b.to_vec()).unwrap())
    }

    #[test]
    fn values_at_zero() {
        let data = ds(&[vec![1.0, 2.0], vec![0.0, 1.0], vec![3.0, 0.0]], &[1.0, -2.0, 0.5]);
        let ridge = Objective::ridge(0.3, data.clone()).unwrap();
        let expect = (1.0 + 4.0 + 0.25) / 6.0;
        assert!((ridge.value(&[0.0, 0.0]) - expect).abs() < 1e-15);
        let logi = Objective::logistic(0.3, data).unwrap();
        assert!((logi.value(&[0.0, 0.0]) - 0.5 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn ridge_hand_value() {
        let obj = Objective::ridge(1.0, ds(&[vec![1.0, 0.0]], &[1.0])).unwrap();
        assert!((obj.value(&[1.0, 0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn logistic_gradient_at_zero() {
        let data = ds(&[vec![1.0, -2.0], vec![0.5, 1.0]], &[1.0, -1.0]);
        let obj = Objective::logistic(0.1, data).unwrap();
        let g = obj.component_gradient(1, &[0.0, 0.0]).unwrap();
        assert!((g[0] - 0.25 * -1.0 * 0.5).abs() < 1e-15);
        assert!((g[1] - 0.25 * -1.0 * 1.0).abs() < 1e-15);
    }

    #[test]
    fn logistic_value_is_overflow_safe() {
        let obj = Objective::logistic(0.1, ds(&[vec![1.0]], &[1.0])).unwrap();
        let v = obj.value(&[1e4]);
        assert!(v.is_finite());
        assert!((v - (0.5 * 1e4 + 0.05 * 1e8)).abs() < 1e-6);
        assert!(obj.component_gradient(0, &[-1e4]).unwrap()[0].is_finite());
    }

    #[test]
    fn errors() {
        let data = ds(&[vec![1.0]], &[1.0]);
        assert!(matches!(Objective::ridge(0.0, data.clone()), Err(ObjectiveError::NonPositiveLambda(_))));
        let obj = Objective::ridge(1.0, data).unwrap();
        assert!(matches!(obj.component_gradient(1, &[0.0]), Err(ObjectiveError::IndexOutOfRange { index: 1, n: 1 })));
        assert!(matches!(obj.component_gradient(0, &[0.0, 1.0]), Err(ObjectiveError::DimensionMismatch { .. })));
    }

    #[test]
    fn rank_one_profile() {
        let obj = Objective::ridge(0.1, ds(&[vec![0.6, 0.8]], &[1.0])).unwrap();
        let p = obj.smoothness_profile(&Partitioning::single(1)).unwrap();
        assert!((p.l_i[0] - 1.1).abs() < 1e-12);
        assert!((p.l - 1.1).abs() < 1e-9);
        assert_eq!(p.mu, 0.1);
    }

    #[test]
    fn ridge_one_dimensional_solution() {
        let obj = Objective::ridge(1.0, ds(&[vec![1.0]], &[2.0])).unwrap();
        let x = obj.solve_reference(1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn logistic_solve_meets_tolerance() {
        let data = ds(&[vec![1.0, 0.2], vec![-0.3, 1.0], vec![0.5, 0.5]], &[1.0, -1.0, 1.0]);
        let obj = Objective::logistic(0.05, data).unwrap();
        let x = obj.solve_reference(1e-10).unwrap();
        assert!(linalg::norm_sq(&obj.gradient(&x)).sqrt() <= 1e-10);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("Ridge".parse::<ObjectiveKind>().unwrap(), ObjectiveKind::Ridge);
        assert!("hinge".parse::<ObjectiveKind>().is_err());
    }
}

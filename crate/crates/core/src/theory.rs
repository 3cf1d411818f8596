//! Closed-form expected smoothness, gradient noise, step size, iteration
//! counts and the optimal batch size for the four samplings.
//!
//! Notation follows the rest of the crate: block `C_j` has `n_j` examples and
//! selection probability `q_j`, `e_j = q_j (n_j - 1)`, `h_i = ||grad f_i(x)||^2`,
//! `hbar_j` is the block mean of `h_i` and `h_j = ||grad f_Cj(x)||^2`.

use log::debug;
use thiserror::Error;

use crate::dataset::Partitioning;
use crate::linalg;
use crate::objective::{Objective, SmoothnessProfile};
use crate::sampling::{InclusionProbs, SamplingError, SamplingFamily, SamplingStrategy, SamplingVariant};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("block {block} has one example; the nice-sampling formulas need n_Cj >= 2")]
    SingletonBlock { block: usize },
    #[error("expected smoothness must be positive, got {0}")]
    NonPositiveSmoothness(f64),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// Per-component and per-block squared gradient norms at some point.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseAggregates {
    /// `h_i`
    pub h: Vec<f64>,
    /// `hbar_Cj`
    pub hbar_c: Vec<f64>,
    /// `h_Cj`
    pub h_c: Vec<f64>,
    /// `hbar = (1/n) sum_i h_i`
    pub hbar: f64,
}

impl NoiseAggregates {
    /// Builds the aggregates from per-component gradients.
    pub fn from_gradients(part: &Partitioning, grads: &[Vec<f64>]) -> Self {
        let n = grads.len();
        let d = grads.first().map_or(0, Vec::len);
        let h: Vec<f64> = grads.iter().map(|g| linalg::norm_sq(g)).collect();
        let mut hbar_c = Vec::with_capacity(part.num_blocks());
        let mut h_c = Vec::with_capacity(part.num_blocks());
        for set in part.sets() {
            let m = set.len() as f64;
            let mut mean = vec![0.0; d];
            for &i in set {
                linalg::axpy(1.0 / m, &grads[i], &mut mean);
            }
            h_c.push(linalg::norm_sq(&mean));
            hbar_c.push(set.iter().map(|&i| h[i]).sum::<f64>() / m);
        }
        let hbar = h.iter().sum::<f64>() / n as f64;
        NoiseAggregates { h, hbar_c, h_c, hbar }
    }
}

/// Computes every `grad f_i(x)` and the derived aggregates in one pass.
pub fn noise_aggregates_exact(obj: &Objective, part: &Partitioning, x: &[f64]) -> NoiseAggregates {
    let grads: Vec<Vec<f64>> = (0..obj.n())
        .map(|i| {
            let mut g = vec![0.0; obj.d()];
            obj.component_gradient_into(i, x, &mut g);
            g
        })
        .collect();
    NoiseAggregates::from_gradients(part, &grads)
}

fn check_nice_blocks(part: &Partitioning) -> Result<(), TheoryError> {
    match part.sizes().position(|s| s < 2) {
        Some(block) => Err(TheoryError::SingletonBlock { block }),
        None => Ok(()),
    }
}

/// Single-block `tau`-nice expected smoothness.
pub fn expected_smoothness_nice(n: usize, tau: usize, l: f64, l_max: f64) -> f64 {
    if n == 1 {
        return l;
    }
    let (n, t) = (n as f64, tau as f64);
    n * (t - 1.0) * l / (t * (n - 1.0)) + (n - t) * l_max / (t * (n - 1.0))
}

/// Single-block independent expected smoothness, `L + max_i (1-p_i) L_i / (p_i n)`.
pub fn expected_smoothness_independent(l: f64, l_i: &[f64], p: impl Fn(usize) -> f64) -> f64 {
    let n = l_i.len() as f64;
    let worst = l_i.iter().enumerate().map(|(i, &li)| (1.0 - p(i)) * li / p(i)).fold(f64::NEG_INFINITY, f64::max);
    l + worst / n
}

/// Expected smoothness bound `L(tau)` for the strategy's batch size.
pub fn expected_smoothness(s: &SamplingStrategy, profile: &SmoothnessProfile) -> Result<f64, TheoryError> {
    let part = s.partitioning();
    let n = part.n();
    if n == 1 {
        return Ok(profile.l);
    }
    let tau = s.tau() as f64;
    let nf = n as f64;
    let value = match s.variant() {
        SamplingVariant::Nice => expected_smoothness_nice(n, s.tau(), profile.l, profile.l_max()),
        SamplingVariant::Independent => match s.probs() {
            InclusionProbs::Proportional => profile.l + profile.l_max() * (nf / tau - 1.0) / nf,
            InclusionProbs::Explicit(_) => expected_smoothness_independent(profile.l, &profile.l_i, |i| s.p(i)),
        },
        SamplingVariant::PartitionNice => {
            check_nice_blocks(part)?;
            let worst = (0..part.num_blocks())
                .map(|j| {
                    let nj = part.size(j) as f64;
                    nj / part.e(j) * ((tau - 1.0) * profile.l_c[j] * nj + (nj - tau) * profile.lmax_c[j])
                })
                .fold(f64::NEG_INFINITY, f64::max);
            worst / (nf * tau)
        }
        SamplingVariant::PartitionIndependent => {
            let worst = (0..part.num_blocks())
                .map(|j| {
                    let nj = part.size(j) as f64;
                    let qj = part.prob(j);
                    let spread = match s.probs() {
                        InclusionProbs::Proportional => profile.lmax_c[j] * (nj / tau - 1.0) / qj,
                        InclusionProbs::Explicit(_) => part
                            .set(j)
                            .iter()
                            .map(|&i| profile.l_i[i] * (1.0 - s.p(i)) / (qj * s.p(i)))
                            .fold(f64::NEG_INFINITY, f64::max),
                    };
                    nj * profile.l_c[j] / qj + spread
                })
                .fold(f64::NEG_INFINITY, f64::max);
            worst / nf
        }
    };
    Ok(value)
}

/// `sigma(x*, tau)` for single-block nice sampling, valid where `grad f(x) = 0`.
pub fn gradient_noise_nice_at_optimum(n: usize, tau: usize, h: &[f64]) -> f64 {
    if n == 1 {
        return 0.0;
    }
    let (nf, t) = (n as f64, tau as f64);
    (nf - t) / (nf * t * (nf - 1.0)) * h.iter().sum::<f64>()
}

/// `sigma(x*, tau)` for single-block independent sampling, valid where `grad f(x) = 0`.
pub fn gradient_noise_independent_at_optimum(h: &[f64], p: impl Fn(usize) -> f64) -> f64 {
    let n = h.len() as f64;
    h.iter().enumerate().map(|(i, &hi)| (1.0 - p(i)) * hi / p(i)).sum::<f64>() / (n * n)
}

/// Gradient noise `sigma(x, tau) = E ||grad f_v(x)||^2` at the point the
/// aggregates were taken.
pub fn gradient_noise(s: &SamplingStrategy, agg: &NoiseAggregates) -> Result<f64, TheoryError> {
    let part = s.partitioning();
    let n = part.n();
    if n == 1 {
        return Ok(agg.h_c[0]);
    }
    let nf = n as f64;
    let tau = s.tau() as f64;
    let value = if s.variant().is_nice() {
        check_nice_blocks(part)?;
        let sum: f64 = (0..part.num_blocks())
            .map(|j| {
                let nj = part.size(j) as f64;
                nj * nj / part.e(j) * ((tau - 1.0) * agg.h_c[j] * nj + (nj - tau) * agg.hbar_c[j])
            })
            .sum();
        sum / (nf * nf * tau)
    } else {
        let sum: f64 = (0..part.num_blocks())
            .map(|j| {
                let nj = part.size(j) as f64;
                let spread = match s.probs() {
                    InclusionProbs::Proportional => (nj / tau - 1.0) * nj * agg.hbar_c[j],
                    InclusionProbs::Explicit(_) => {
                        part.set(j).iter().map(|&i| (1.0 - s.p(i)) * agg.h[i] / s.p(i)).sum()
                    }
                };
                (nj * nj * agg.h_c[j] + spread) / part.prob(j)
            })
            .sum();
        sum / (nf * nf)
    };
    Ok(value)
}

/// `gamma = 1/2 min{1/L, eps mu / min(C, 2 sigma)}`. A `cap` of `None` (or a
/// non-positive value) disables capping. When the noise denominator is zero
/// the step is `1/(2L)`.
pub fn step_size(l_tau: f64, sigma: f64, eps: f64, mu: f64, cap: Option<f64>) -> Result<f64, TheoryError> {
    if !(l_tau > 0.0) {
        return Err(TheoryError::NonPositiveSmoothness(l_tau));
    }
    let noise = match cap {
        Some(c) if c > 0.0 => c.min(2.0 * sigma),
        _ => 2.0 * sigma,
    };
    let smooth = 1.0 / l_tau;
    if noise <= 0.0 {
        return Ok(0.5 * smooth);
    }
    Ok(0.5 * smooth.min(eps * mu / noise))
}

/// Iterations sufficient for `E||x^k - x*||^2 <= eps` under a fixed step.
pub fn iteration_bound(l_tau: f64, sigma: f64, eps: f64, mu: f64, x0_dist_sq: f64) -> u64 {
    let log_term = (2.0 * x0_dist_sq / eps).ln();
    if log_term <= 0.0 {
        return 0;
    }
    let rate = (2.0 / mu) * l_tau.max(2.0 * sigma / (eps * mu));
    (rate * log_term).ceil() as u64
}

/// Both branches of the total complexity `T(tau)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Complexity {
    pub tau: usize,
    pub expected_smoothness: f64,
    pub noise: f64,
    /// `tau * L(tau)`
    pub smoothness_term: f64,
    /// `(2 / (eps mu)) tau sigma(x*, tau)`
    pub noise_term: f64,
    /// `T(tau)`; the log factor is dropped when no initial distance is given.
    pub total: f64,
}

impl Complexity {
    /// The `tau`-dependent part that the optimal batch size minimizes.
    pub fn max_term(&self) -> f64 {
        self.smoothness_term.max(self.noise_term)
    }

    pub fn noise_binding(&self) -> bool {
        self.noise_term > self.smoothness_term
    }
}

pub fn total_complexity(
    s: &SamplingStrategy,
    profile: &SmoothnessProfile,
    agg_at_xstar: &NoiseAggregates,
    eps: f64,
    mu: f64,
    x0_dist_sq: Option<f64>,
) -> Result<Complexity, TheoryError> {
    let l_tau = expected_smoothness(s, profile)?;
    let sigma = gradient_noise(s, agg_at_xstar)?;
    let tau = s.tau() as f64;
    let smoothness_term = tau * l_tau;
    let noise_term = 2.0 / (eps * mu) * tau * sigma;
    let log_factor = x0_dist_sq.map_or(1.0, |d| (2.0 * d / eps).ln().max(0.0));
    Ok(Complexity {
        tau: s.tau(),
        expected_smoothness: l_tau,
        noise: sigma,
        smoothness_term,
        noise_term,
        total: 2.0 / mu * smoothness_term.max(noise_term) * log_factor,
    })
}

/// How [`optimal_tau`] arrived at its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TauRule {
    /// Noise term non-decreasing in tau, so the smallest batch wins.
    Gate,
    ClosedForm,
    /// A zero or negative denominator forced an exhaustive scan of T(tau).
    BruteForce,
    /// Only the full batch is feasible.
    Trivial,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TauChoice {
    pub tau: usize,
    /// Unrounded minimizer from the closed form, when it was used.
    pub tau_real: Option<f64>,
    pub rule: TauRule,
}

/// Integer argmin of the `tau`-dependent part of `T(tau)` over every feasible
/// batch size. Ties go to the smaller batch.
pub fn brute_force_tau(
    family: &SamplingFamily,
    profile: &SmoothnessProfile,
    agg: &NoiseAggregates,
    eps: f64,
    mu: f64,
) -> Result<usize, TheoryError> {
    let mut best = (1usize, f64::INFINITY);
    for tau in 1..=family.max_tau() {
        let c = total_complexity(&family.at(tau)?, profile, agg, eps, mu, None)?;
        if c.max_term() < best.1 {
            best = (tau, c.max_term());
        }
    }
    Ok(best.0)
}

fn max_term_at(
    family: &SamplingFamily,
    tau: usize,
    profile: &SmoothnessProfile,
    agg: &NoiseAggregates,
    eps: f64,
    mu: f64,
) -> Result<f64, TheoryError> {
    Ok(total_complexity(&family.at(tau)?, profile, agg, eps, mu, None)?.max_term())
}

/// Closed-form optimal batch size, rounded to whichever neighbouring integer
/// gives the smaller `T(tau)` and clamped to `[1, min_j n_Cj]`.
///
/// The independent variants assume `p_i = tau / n_Cj`.
pub fn optimal_tau(
    family: &SamplingFamily,
    profile: &SmoothnessProfile,
    agg: &NoiseAggregates,
    eps: f64,
    mu: f64,
) -> Result<TauChoice, TheoryError> {
    let part = family.partitioning();
    let max_tau = family.max_tau();
    if part.n() == 1 || max_tau == 1 {
        return Ok(TauChoice { tau: 1, tau_real: None, rule: TauRule::Trivial });
    }
    let n = part.n() as f64;
    let c = 2.0 / (eps * mu);
    let blocks = 0..part.num_blocks();
    let size = |j: usize| part.size(j) as f64;

    let tau_real = if family.variant().is_nice() {
        check_nice_blocks(part)?;
        let gate: f64 =
            blocks.clone().map(|j| size(j).powi(2) / part.e(j) * (agg.h_c[j] * size(j) - agg.hbar_c[j])).sum();
        if gate > 0.0 {
            return Ok(TauChoice { tau: 1, tau_real: None, rule: TauRule::Gate });
        }
        let s1: f64 = blocks.clone().map(|j| size(j).powi(3) / part.e(j) * (agg.hbar_c[j] - agg.h_c[j])).sum();
        let s2: f64 =
            blocks.clone().map(|j| size(j).powi(2) / part.e(j) * (agg.hbar_c[j] - size(j) * agg.h_c[j])).sum();
        blocks
            .map(|r| {
                let (nr, er) = (size(r), part.e(r));
                let (lr, lmax) = (profile.l_c[r], profile.lmax_c[r]);
                let num = n * nr * nr / er * (lr - lmax) + c * s1;
                let den = n * nr / er * (nr * lr - lmax) + c * s2;
                (num, den)
            })
            .collect::<Vec<_>>()
    } else {
        let gate: f64 = blocks.clone().map(|j| size(j) / part.prob(j) * (size(j) * agg.h_c[j] - agg.hbar_c[j])).sum();
        if gate > 0.0 {
            return Ok(TauChoice { tau: 1, tau_real: None, rule: TauRule::Gate });
        }
        let s1: f64 = blocks.clone().map(|j| size(j).powi(2) / part.prob(j) * agg.hbar_c[j]).sum();
        let s2: f64 = blocks.clone().map(|j| size(j) / part.prob(j) * (agg.hbar_c[j] - size(j) * agg.h_c[j])).sum();
        blocks
            .map(|r| {
                let (nr, qr) = (size(r), part.prob(r));
                let (lr, lmax) = (profile.l_c[r], profile.lmax_c[r]);
                let num = c * s1 - n * nr / qr * lmax;
                let den = c * s2 + n / qr * (nr * lr - lmax);
                (num, den)
            })
            .collect::<Vec<_>>()
    };

    if tau_real.iter().any(|&(_, den)| !(den > 0.0) || !den.is_finite()) {
        debug!("optimal_tau: degenerate denominator, scanning all batch sizes");
        let tau = brute_force_tau(family, profile, agg, eps, mu)?;
        return Ok(TauChoice { tau, tau_real: None, rule: TauRule::BruteForce });
    }
    let real = tau_real.iter().map(|&(num, den)| num / den).fold(f64::INFINITY, f64::min);
    if !real.is_finite() {
        let tau = brute_force_tau(family, profile, agg, eps, mu)?;
        return Ok(TauChoice { tau, tau_real: None, rule: TauRule::BruteForce });
    }

    let clamp = |t: f64| t.clamp(1.0, max_tau as f64) as usize;
    let lo = clamp(real.floor());
    let hi = clamp(real.ceil());
    let tau = if lo == hi {
        lo
    } else if max_term_at(family, hi, profile, agg, eps, mu)? < max_term_at(family, lo, profile, agg, eps, mu)? {
        hi
    } else {
        lo
    };
    Ok(TauChoice { tau, tau_real: Some(real), rule: TauRule::ClosedForm })
}

/// Step-size envelope of the adaptive method.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StepBounds {
    /// `1/2 max_tau 1/L(tau)`
    pub gamma_max: f64,
    /// `1/2 min{min_tau 1/L(tau), eps mu / C}`; only a bound when a cap is set.
    pub gamma_min: Option<f64>,
}

impl StepBounds {
    pub fn contains(&self, gamma: f64) -> bool {
        let slack = 1e-12 * self.gamma_max;
        gamma > 0.0 && gamma <= self.gamma_max + slack && self.gamma_min.is_none_or(|lo| gamma >= lo - slack)
    }
}

pub fn step_bounds(
    family: &SamplingFamily,
    profile: &SmoothnessProfile,
    eps: f64,
    mu: f64,
    cap: Option<f64>,
) -> Result<StepBounds, TheoryError> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for tau in 1..=family.max_tau() {
        let inv = 1.0 / expected_smoothness(&family.at(tau)?, profile)?;
        lo = lo.min(inv);
        hi = hi.max(inv);
    }
    let gamma_min = match cap {
        Some(c) if c > 0.0 => Some(0.5 * lo.min(eps * mu / c)),
        _ => None,
    };
    Ok(StepBounds { gamma_max: 0.5 * hi, gamma_min })
}

/// Formula-versus-enumeration comparison at one point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NoiseReport {
    pub tau: usize,
    /// `sigma(x, tau)` from the closed form.
    pub formula: f64,
    /// `E ||grad f_v(x)||^2` by exhaustive enumeration.
    pub enumerated: f64,
    pub abs_diff: f64,
    /// `E ||grad f_v(x) - grad f_v(x*)||^2` by enumeration.
    pub smoothness_lhs: f64,
    /// `2 L(tau) (f(x) - f(x*))`
    pub smoothness_rhs: f64,
}

impl NoiseReport {
    pub fn noise_ok(&self, rel_tol: f64) -> bool {
        self.abs_diff <= rel_tol * (1.0 + self.enumerated)
    }

    pub fn smoothness_ok(&self, abs_tol: f64) -> bool {
        self.smoothness_lhs <= self.smoothness_rhs + abs_tol
    }
}

pub type NoiseFormula<'a> = &'a dyn Fn(&SamplingStrategy, &NoiseAggregates) -> Result<f64, TheoryError>;

/// Checks [`gradient_noise`] and the expected-smoothness inequality against
/// full enumeration of the strategy's support.
pub fn verify_noise_formula(
    s: &SamplingStrategy,
    obj: &Objective,
    profile: &SmoothnessProfile,
    x: &[f64],
    x_star: &[f64],
) -> Result<NoiseReport, TheoryError> {
    verify_noise_formula_with(s, obj, profile, x, x_star, &gradient_noise)
}

/// As [`verify_noise_formula`] but with a substitute noise formula.
pub fn verify_noise_formula_with(
    s: &SamplingStrategy,
    obj: &Objective,
    profile: &SmoothnessProfile,
    x: &[f64],
    x_star: &[f64],
    formula: NoiseFormula<'_>,
) -> Result<NoiseReport, TheoryError> {
    let support = s.enumerate()?;
    let n = obj.n();
    let d = obj.d();
    let grads = |p: &[f64]| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let mut g = vec![0.0; d];
                obj.component_gradient_into(i, p, &mut g);
                g
            })
            .collect()
    };
    let gx = grads(x);
    let gs = grads(x_star);

    let mut enumerated = 0.0;
    let mut lhs = 0.0;
    let mut gv = vec![0.0; d];
    let mut dv = vec![0.0; d];
    for (draw, prob) in &support {
        gv.iter_mut().for_each(|v| *v = 0.0);
        dv.iter_mut().for_each(|v| *v = 0.0);
        for (i, v) in draw.iter() {
            let w = v / n as f64;
            for k in 0..d {
                gv[k] += w * gx[i][k];
                dv[k] += w * (gx[i][k] - gs[i][k]);
            }
        }
        enumerated += prob * linalg::norm_sq(&gv);
        lhs += prob * linalg::norm_sq(&dv);
    }

    let agg = NoiseAggregates::from_gradients(s.partitioning(), &gx);
    let value = formula(s, &agg)?;
    let l_tau = expected_smoothness(s, profile)?;
    Ok(NoiseReport {
        tau: s.tau(),
        formula: value,
        enumerated,
        abs_diff: (value - enumerated).abs(),
        smoothness_lhs: lhs,
        smoothness_rhs: 2.0 * l_tau * (obj.value(x) - obj.value(x_star)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn profile(n: usize, l: f64, lmax: f64) -> SmoothnessProfile {
        let mut l_i = vec![l; n];
        l_i[0] = lmax;
        SmoothnessProfile { l_i, l, l_c: vec![l], lmax_c: vec![lmax], lbar_c: vec![l], mu: 0.1 }
    }

    #[test]
    fn nice_smoothness_endpoints() {
        let p = profile(4, 2.0, 4.0);
        let at = |tau| expected_smoothness(&SamplingStrategy::nice(4, tau).unwrap(), &p).unwrap();
        assert!((at(1) - 4.0).abs() < 1e-15);
        assert!((at(4) - 2.0).abs() < 1e-15);
        assert!((at(2) - 8.0 / 3.0).abs() < 1e-15);
        let pn = SamplingStrategy::partition_nice(Arc::new(Partitioning::single(4)), 2).unwrap();
        assert!((expected_smoothness(&pn, &p).unwrap() - 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn nice_noise_at_optimum() {
        let h = [1.0; 4];
        assert!((gradient_noise_nice_at_optimum(4, 2, &h) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(gradient_noise_nice_at_optimum(4, 4, &h), 0.0);
        assert!((gradient_noise_nice_at_optimum(4, 1, &h) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn step_size_rule() {
        assert_eq!(step_size(4.0, 0.0, 0.1, 0.5, None).unwrap(), 0.125);
        assert!((step_size(4.0, 1.0, 0.1, 0.5, Some(10.0)).unwrap() - 0.0125).abs() < 1e-16);
        assert_eq!(step_size(2.0, 1e-9, 0.1, 0.5, None).unwrap(), 0.25);
        // the cap only ever enlarges the step
        assert!((step_size(4.0, 100.0, 0.1, 0.5, Some(1.0)).unwrap() - 0.025).abs() < 1e-16);
        assert!(matches!(step_size(0.0, 1.0, 0.1, 0.5, None), Err(TheoryError::NonPositiveSmoothness(_))));
        assert_eq!(step_size(4.0, 0.0, 0.1, 0.5, Some(0.0)).unwrap(), 0.125);
    }

    #[test]
    fn iteration_bound_examples() {
        assert_eq!(iteration_bound(4.0, 1.0, 0.1, 0.5, 0.05), 0);
        assert_eq!(iteration_bound(4.0, 1.0, 0.1, 0.5, 1.0), 480);
        let l = 3.0;
        let k = iteration_bound(l, 0.0, 0.01, 0.5, 2.0);
        assert_eq!(k, ((2.0 * l / 0.5) * (400f64).ln()).ceil() as u64);
    }

    #[test]
    fn step_bounds_contain_rule_outputs() {
        let p = profile(5, 1.0, 3.0);
        let fam = SamplingFamily::new(SamplingVariant::Nice, Arc::new(Partitioning::single(5))).unwrap();
        let b = step_bounds(&fam, &p, 0.01, 0.1, Some(2.0)).unwrap();
        assert!((b.gamma_max - 0.5).abs() < 1e-15);
        assert!((b.gamma_min.unwrap() - 0.5 * (1.0f64 / 3.0).min(0.001 / 2.0)).abs() < 1e-15);
        for tau in 1..=5 {
            let l = expected_smoothness(&fam.at(tau).unwrap(), &p).unwrap();
            for sigma in [0.0, 1e-6, 1.0, 1e6] {
                assert!(b.contains(step_size(l, sigma, 0.01, 0.1, Some(2.0)).unwrap()));
            }
        }
        assert!(step_bounds(&fam, &p, 0.01, 0.1, None).unwrap().gamma_min.is_none());
    }

    #[test]
    fn single_example_short_circuits() {
        let p = profile(1, 2.0, 2.0);
        let s = SamplingStrategy::nice(1, 1).unwrap();
        assert_eq!(expected_smoothness(&s, &p).unwrap(), 2.0);
        let agg = NoiseAggregates { h: vec![4.0], hbar_c: vec![4.0], h_c: vec![4.0], hbar: 4.0 };
        assert_eq!(gradient_noise(&s, &agg).unwrap(), 4.0);
        let fam = SamplingFamily::new(SamplingVariant::Nice, Arc::new(Partitioning::single(1))).unwrap();
        assert_eq!(optimal_tau(&fam, &p, &agg, 0.1, 0.1).unwrap().rule, TauRule::Trivial);
    }
}

//! SGD with an adaptively learned batch size, plus the fixed-batch baseline.
//!
//! The adaptive method keeps the most recent `grad f_i` of every component
//! (refreshed only when `i` is sampled) and uses them in place of the unknown
//! values at the optimum. Each iteration it picks `tau^k` from the closed form,
//! evaluates `L(tau^k)` and `sigma(x^k, tau^k)` from the tracked aggregates,
//! sets the step from those, and takes one mini-batch step.

use std::sync::Arc;

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::Partitioning;
use crate::linalg;
use crate::objective::{Objective, ObjectiveError, SmoothnessProfile};
use crate::sampling::{DrawScratch, SampleDraw, SamplingError, SamplingFamily, SamplingStrategy};
use crate::theory::{self, NoiseAggregates, StepBounds, TheoryError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("iterate became non-finite at iteration {iter}")]
    Diverged { iter: u64, trace: Vec<TraceRecord> },
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Everything a run needs that does not depend on the seed.
#[derive(Debug, Clone)]
pub struct Instance {
    pub objective: Arc<Objective>,
    pub partitioning: Arc<Partitioning>,
    pub profile: SmoothnessProfile,
    /// Reference solution; only used for the relative-error metric and for
    /// the noise at the optimum of the fixed-batch baseline.
    pub x_star: Vec<f64>,
    pub agg_star: NoiseAggregates,
}

impl Instance {
    /// Computes constants and a reference solution with gradient norm `<= tol`.
    pub fn new(objective: Arc<Objective>, partitioning: Arc<Partitioning>, tol: f64) -> Result<Self, RunError> {
        let x_star = objective.solve_reference(tol)?;
        Self::with_reference(objective, partitioning, x_star)
    }

    pub fn with_reference(
        objective: Arc<Objective>,
        partitioning: Arc<Partitioning>,
        x_star: Vec<f64>,
    ) -> Result<Self, RunError> {
        if partitioning.n() != objective.n() {
            return Err(RunError::Config(format!(
                "partitioning covers {} examples, dataset has {}",
                partitioning.n(),
                objective.n()
            )));
        }
        let profile = objective.smoothness_profile(&partitioning)?;
        let agg_star = theory::noise_aggregates_exact(&objective, &partitioning, &x_star);
        Ok(Instance { objective, partitioning, profile, x_star, agg_star })
    }

    pub fn n(&self) -> usize {
        self.objective.n()
    }

    pub fn d(&self) -> usize {
        self.objective.d()
    }

    pub fn mu(&self) -> f64 {
        self.profile.mu
    }

    /// Theoretical optimal batch size from exact aggregates at `x*`.
    pub fn optimal_tau(&self, family: &SamplingFamily, eps: f64) -> Result<theory::TauChoice, TheoryError> {
        theory::optimal_tau(family, &self.profile, &self.agg_star, eps, self.mu())
    }
}

/// Stored component gradients and their running aggregates.
#[derive(Debug, Clone)]
pub struct GradientTracker {
    d: usize,
    part: Arc<Partitioning>,
    /// Row-major `n x d`.
    grads: Vec<f64>,
    partition_sums: Vec<Vec<f64>>,
    sum_h_c: Vec<f64>,
    agg: NoiseAggregates,
    evals_since_refresh: usize,
    refresh_every: usize,
}

impl GradientTracker {
    /// One full pass at `x0`.
    pub fn new(obj: &Objective, part: Arc<Partitioning>, x0: &[f64]) -> Self {
        let (n, d) = (obj.n(), obj.d());
        let mut grads = vec![0.0; n * d];
        for (i, g) in grads.chunks_exact_mut(d.max(1)).enumerate().take(n) {
            obj.component_gradient_into(i, x0, g);
        }
        let k = part.num_blocks();
        let mut tracker = GradientTracker {
            d,
            part,
            grads,
            partition_sums: vec![vec![0.0; d]; k],
            sum_h_c: vec![0.0; k],
            agg: NoiseAggregates { h: vec![0.0; n], hbar_c: vec![0.0; k], h_c: vec![0.0; k], hbar: 0.0 },
            evals_since_refresh: 0,
            refresh_every: 10 * n,
        };
        for i in 0..n {
            tracker.agg.h[i] = linalg::norm_sq(tracker.grad(i));
        }
        tracker.refresh();
        tracker
    }

    /// Recompute block sums from scratch after this many gradient evaluations.
    pub fn with_refresh_every(mut self, evals: usize) -> Self {
        self.refresh_every = evals.max(1);
        self
    }

    #[inline]
    pub fn grad(&self, i: usize) -> &[f64] {
        &self.grads[i * self.d..(i + 1) * self.d]
    }

    pub fn h(&self) -> &[f64] {
        &self.agg.h
    }

    pub fn aggregates(&self) -> &NoiseAggregates {
        &self.agg
    }

    pub fn partition_sums(&self) -> &[Vec<f64>] {
        &self.partition_sums
    }

    /// Rebuilds block sums and aggregates from the stored gradients.
    pub fn refresh(&mut self) {
        for j in 0..self.part.num_blocks() {
            let mut sum = vec![0.0; self.d];
            let mut sh = 0.0;
            for &i in self.part.set(j) {
                linalg::axpy(1.0, self.grad(i), &mut sum);
                sh += self.agg.h[i];
            }
            self.partition_sums[j] = sum;
            self.sum_h_c[j] = sh;
            self.update_block(j);
        }
        self.agg.hbar = self.sum_h_c.iter().sum::<f64>() / self.part.n() as f64;
        self.evals_since_refresh = 0;
    }

    fn update_block(&mut self, j: usize) {
        let m = self.part.size(j) as f64;
        self.agg.h_c[j] = linalg::norm_sq(&self.partition_sums[j]) / (m * m);
        self.agg.hbar_c[j] = self.sum_h_c[j] / m;
    }

    /// Largest deviation between the incremental block sums and a full recomputation.
    pub fn drift(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.part.num_blocks() {
            let mut sum = vec![0.0; self.d];
            for &i in self.part.set(j) {
                linalg::axpy(1.0, self.grad(i), &mut sum);
            }
            worst = worst.max(linalg::dist_sq(&sum, &self.partition_sums[j]).sqrt());
        }
        worst
    }

    /// Replaces the stored gradient of every sampled index with `grad f_i(x)`.
    pub fn lazy_update(&mut self, obj: &Objective, draw: &SampleDraw, x: &[f64]) {
        let d = self.d;
        let mut fresh = vec![0.0; d];
        for &i in &draw.indices {
            obj.component_gradient_into(i, x, &mut fresh);
            let j = self.part.owner(i);
            let stored = &mut self.grads[i * d..(i + 1) * d];
            for k in 0..d {
                self.partition_sums[j][k] += fresh[k] - stored[k];
            }
            stored.copy_from_slice(&fresh);
            let h_new = linalg::norm_sq(&fresh);
            self.sum_h_c[j] += h_new - self.agg.h[i];
            self.agg.h[i] = h_new;
        }
        self.evals_since_refresh += draw.len();
        if self.evals_since_refresh >= self.refresh_every {
            self.refresh();
            return;
        }
        if draw.is_empty() {
            return;
        }
        let mut last = usize::MAX;
        for &i in &draw.indices {
            let j = self.part.owner(i);
            if j != last {
                self.update_block(j);
                last = j;
            }
        }
        self.agg.hbar = self.sum_h_c.iter().sum::<f64>() / self.part.n() as f64;
    }

    /// `(1/n) sum_{i in S} v_i g_i` over the stored gradients.
    fn weighted_sum(&self, draw: &SampleDraw, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let n = self.part.n() as f64;
        for (i, v) in draw.iter() {
            linalg::axpy(v / n, self.grad(i), out);
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub eps: f64,
    /// Variance cap `C`; `None` disables it.
    pub cap: Option<f64>,
    pub seed: u64,
    pub max_epochs: f64,
    /// Stop once `||x - x*||^2 / ||x0 - x*||^2` drops to this; defaults to `eps / 10`.
    /// Zero disables the check.
    pub target_rel_error: Option<f64>,
    /// Hard iteration limit, if any.
    pub max_iters: Option<u64>,
    /// Keep every `trace_every`-th row (the last row is always kept).
    pub trace_every: u64,
    /// Initial point; drawn from a standard normal when absent.
    pub x0: Option<Vec<f64>>,
    /// Re-derive `tau^k` every this many iterations.
    pub recompute_every: u64,
    /// Tracker block-sum refresh period in gradient evaluations (default `10 n`).
    pub refresh_every: Option<usize>,
    /// Record `(iterate, sample)` pairs for offline replay.
    pub record_history: bool,
}

impl RunConfig {
    pub fn new(eps: f64, seed: u64) -> Self {
        RunConfig {
            eps,
            cap: None,
            seed,
            max_epochs: 1000.0,
            target_rel_error: None,
            max_iters: None,
            trace_every: 1,
            x0: None,
            recompute_every: 1,
            refresh_every: None,
            record_history: false,
        }
    }

    pub fn target(&self) -> f64 {
        self.target_rel_error.unwrap_or(self.eps / 10.0)
    }

    fn validate(&self, d: usize) -> Result<(), RunError> {
        if !(self.eps > 0.0) {
            return Err(RunError::Config(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.max_epochs > 0.0) {
            return Err(RunError::Config(format!("max_epochs must be positive, got {}", self.max_epochs)));
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != d {
                return Err(RunError::Config(format!("x0 has dimension {}, expected {d}", x0.len())));
            }
        }
        Ok(())
    }

    /// `x0`, or standard-normal entries from the run seed.
    pub fn initial_point(&self, d: usize) -> Vec<f64> {
        match &self.x0 {
            Some(x0) => x0.clone(),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()
            }
        }
    }

    /// Sampling stream for a run; independent of the stream that draws `x0`.
    fn sampling_rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream + 1);
        rng
    }
}

const ADAPTIVE_STREAM: u64 = u64::MAX - 1;

/// One row of a run log, describing iterate `x^k` and the parameters chosen there.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TraceRecord {
    pub iter: u64,
    /// Cumulative gradient evaluations divided by `n`.
    pub epochs: f64,
    pub rel_error: f64,
    pub tau: usize,
    pub gamma: f64,
    pub sigma: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

pub const TRACE_HEADER: &str = "iter,epochs,rel_error,tau,gamma,sigma,L";

/// Shortest round-trip form, switching to exponent notation for very small or large values.
pub fn csv_num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Renders rows as CSV with [`TRACE_HEADER`].
pub fn trace_to_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.iter,
            csv_num(r.epochs),
            csv_num(r.rel_error),
            r.tau,
            csv_num(r.gamma),
            csv_num(r.sigma),
            csv_num(r.l)
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryStep {
    pub x: Vec<f64>,
    pub sample: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub trace: Vec<TraceRecord>,
    pub x: Vec<f64>,
    pub iterations: u64,
    pub epochs: f64,
    pub x0_dist_sq: f64,
    pub final_rel_error: f64,
    /// Epoch count at which the target was first met.
    pub epochs_to_target: Option<f64>,
    pub step_bounds: Option<StepBounds>,
    /// Tracked `h_i` at the end of an adaptive run.
    pub tracker_h: Option<Vec<f64>>,
    pub history: Option<Vec<HistoryStep>>,
}

impl RunResult {
    pub fn reached(&self) -> bool {
        self.epochs_to_target.is_some()
    }

    pub fn dist_sq(&self) -> f64 {
        self.final_rel_error * self.x0_dist_sq
    }
}

struct Recorder<'a> {
    cfg: &'a RunConfig,
    trace: Vec<TraceRecord>,
    history: Option<Vec<HistoryStep>>,
}

impl Recorder<'_> {
    fn row(&mut self, row: TraceRecord, last: bool) {
        if last || row.iter.is_multiple_of(self.cfg.trace_every.max(1)) {
            self.trace.push(row);
        }
    }
}

enum Stop {
    Continue,
    Reached,
    Budget,
}

fn stop_condition(cfg: &RunConfig, rel: f64, epochs: f64, iter: u64) -> Stop {
    let target = cfg.target();
    if target > 0.0 && rel <= target {
        Stop::Reached
    } else if epochs >= cfg.max_epochs || cfg.max_iters.is_some_and(|m| iter >= m) {
        Stop::Budget
    } else {
        Stop::Continue
    }
}

/// Adaptive batch-size SGD. `tau^k`, `L^k`, `sigma^k` and `gamma^k` are all
/// re-derived from tracked gradient estimates; `x*` is used only for the log.
pub fn run_adaptive(inst: &Instance, family: &SamplingFamily, cfg: &RunConfig) -> Result<RunResult, RunError> {
    cfg.validate(inst.d())?;
    let obj = &*inst.objective;
    let part = family.partitioning().clone();
    let (eps, mu) = (cfg.eps, inst.mu());
    let bounds = theory::step_bounds(family, &inst.profile, eps, mu, cfg.cap)?;

    let mut x = cfg.initial_point(inst.d());
    let d0 = linalg::dist_sq(&x, &inst.x_star);
    let mut tracker = GradientTracker::new(obj, part.clone(), &x);
    if let Some(r) = cfg.refresh_every {
        tracker = tracker.with_refresh_every(r);
    }
    let mut rng = cfg.sampling_rng(ADAPTIVE_STREAM);
    let mut scratch = DrawScratch::new(&part);
    let mut rec = Recorder { cfg, trace: Vec::new(), history: cfg.record_history.then(Vec::new) };
    let mut g = vec![0.0; inst.d()];

    // the initial full pass that seeds the tracker costs one epoch
    let n = inst.n() as u64;
    let mut evals = n;
    let mut iter = 0u64;
    let mut tau = 1usize;
    let mut reached_at = None;
    loop {
        let rel = linalg::dist_sq(&x, &inst.x_star) / d0;
        let epochs = evals as f64 / n as f64;
        if iter.is_multiple_of(cfg.recompute_every.max(1)) {
            tau = theory::optimal_tau(family, &inst.profile, tracker.aggregates(), eps, mu)?.tau;
        }
        let strategy = family.at(tau)?;
        let l_k = theory::expected_smoothness(&strategy, &inst.profile)?;
        let sigma_k = theory::gradient_noise(&strategy, tracker.aggregates())?;
        let gamma = theory::step_size(l_k, sigma_k, eps, mu, cfg.cap)?;
        if !bounds.contains(gamma) {
            warn!("step {gamma} at iteration {iter} outside [{:?}, {}]", bounds.gamma_min, bounds.gamma_max);
        }

        let stop = stop_condition(cfg, rel, epochs, iter);
        let row = TraceRecord { iter, epochs, rel_error: rel, tau, gamma, sigma: sigma_k, l: l_k };
        rec.row(row, !matches!(stop, Stop::Continue));
        match stop {
            Stop::Reached => {
                reached_at = Some(epochs);
                break;
            }
            Stop::Budget => break,
            Stop::Continue => {}
        }

        let draw = strategy.draw_with(&mut rng, &mut scratch);
        if let Some(h) = rec.history.as_mut() {
            h.push(HistoryStep { x: x.clone(), sample: draw.indices.clone() });
        }
        tracker.lazy_update(obj, &draw, &x);
        tracker.weighted_sum(&draw, &mut g);
        linalg::axpy(-gamma, &g, &mut x);
        evals += draw.len() as u64;
        iter += 1;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(RunError::Diverged { iter, trace: rec.trace });
        }
    }
    let epochs = evals as f64 / n as f64;
    debug!("adaptive run stopped after {iter} iterations, {epochs:.3} epochs");

    let final_rel_error = linalg::dist_sq(&x, &inst.x_star) / d0;
    Ok(RunResult {
        trace: rec.trace,
        x,
        iterations: iter,
        epochs,
        x0_dist_sq: d0,
        final_rel_error,
        epochs_to_target: reached_at,
        step_bounds: Some(bounds),
        tracker_h: Some(tracker.h().to_vec()),
        history: rec.history,
    })
}

/// Fixed-batch SGD with the step size set from `sigma(x*, tau)`.
pub fn run_fixed(inst: &Instance, strategy: &SamplingStrategy, cfg: &RunConfig) -> Result<RunResult, RunError> {
    cfg.validate(inst.d())?;
    let obj = &*inst.objective;
    let (eps, mu) = (cfg.eps, inst.mu());
    let l_tau = theory::expected_smoothness(strategy, &inst.profile)?;
    let sigma = theory::gradient_noise(strategy, &inst.agg_star)?;
    let gamma = theory::step_size(l_tau, sigma, eps, mu, cfg.cap)?;
    let tau = strategy.tau();

    let mut x = cfg.initial_point(inst.d());
    let d0 = linalg::dist_sq(&x, &inst.x_star);
    let mut rng = cfg.sampling_rng(tau as u64);
    let mut scratch = DrawScratch::new(strategy.partitioning());
    let mut rec = Recorder { cfg, trace: Vec::new(), history: cfg.record_history.then(Vec::new) };
    let n = inst.n() as f64;
    let mut g = vec![0.0; inst.d()];
    let mut gi = vec![0.0; inst.d()];

    let mut evals = 0u64;
    let mut iter = 0u64;
    let mut reached_at = None;
    loop {
        let rel = linalg::dist_sq(&x, &inst.x_star) / d0;
        let epochs = evals as f64 / n;
        let stop = stop_condition(cfg, rel, epochs, iter);
        let row = TraceRecord { iter, epochs, rel_error: rel, tau, gamma, sigma, l: l_tau };
        rec.row(row, !matches!(stop, Stop::Continue));
        match stop {
            Stop::Reached => {
                reached_at = Some(epochs);
                break;
            }
            Stop::Budget => break,
            Stop::Continue => {}
        }

        let draw = strategy.draw_with(&mut rng, &mut scratch);
        if let Some(h) = rec.history.as_mut() {
            h.push(HistoryStep { x: x.clone(), sample: draw.indices.clone() });
        }
        g.iter_mut().for_each(|v| *v = 0.0);
        for (i, v) in draw.iter() {
            obj.component_gradient_into(i, &x, &mut gi);
            linalg::axpy(v / n, &gi, &mut g);
        }
        linalg::axpy(-gamma, &g, &mut x);
        evals += draw.len() as u64;
        iter += 1;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(RunError::Diverged { iter, trace: rec.trace });
        }
    }

    let final_rel_error = linalg::dist_sq(&x, &inst.x_star) / d0;
    Ok(RunResult {
        trace: rec.trace,
        x,
        iterations: iter,
        epochs: evals as f64 / n,
        x0_dist_sq: d0,
        final_rel_error,
        epochs_to_target: reached_at,
        step_bounds: None,
        tracker_h: None,
        history: rec.history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GridEntry {
    pub tau: usize,
    /// Epochs to target, or the epoch budget when it was not reached.
    pub epochs: f64,
    pub reached: bool,
    pub iterations: u64,
}

/// Fixed-batch runs for each `tau` in the list, in parallel. All runs share
/// the initial point derived from `cfg.seed`; each `tau` gets its own
/// sampling stream.
pub fn grid_search(
    inst: &Instance,
    family: &SamplingFamily,
    taus: &[usize],
    cfg: &RunConfig,
) -> Result<Vec<GridEntry>, RunError> {
    let strategies = taus.iter().map(|&t| family.at(t)).collect::<Result<Vec<_>, _>>()?;
    let mut cfg = cfg.clone();
    cfg.x0 = Some(cfg.initial_point(inst.d()));
    cfg.trace_every = u64::MAX;
    strategies
        .par_iter()
        .map(|s| {
            let r = run_fixed(inst, s, &cfg)?;
            Ok(GridEntry {
                tau: s.tau(),
                epochs: r.epochs_to_target.unwrap_or(cfg.max_epochs),
                reached: r.reached(),
                iterations: r.iterations,
            })
        })
        .collect()
}

/// Share (in percent) of grid entries that needed strictly fewer epochs than `epochs`.
pub fn grid_percentile(grid: &[GridEntry], epochs: f64) -> f64 {
    if grid.is_empty() {
        return 0.0;
    }
    100.0 * grid.iter().filter(|e| e.epochs < epochs).count() as f64 / grid.len() as f64
}

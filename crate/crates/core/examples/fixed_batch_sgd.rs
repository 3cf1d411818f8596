//! SGD with a fixed batch size and the matching theoretical step and iteration count.

use std::sync::Arc;

use adabatch::dataset::Partitioning;
use adabatch::linalg::dist_sq;
use adabatch::objective::Objective;
use adabatch::optimizer::{run_fixed, Instance, RunConfig};
use adabatch::sampling::{SamplingFamily, SamplingVariant};
use adabatch::synthetic::{generate, SynthSpec};
use adabatch::theory::{expected_smoothness, gradient_noise, iteration_bound, step_size};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate(&SynthSpec::new(100, 20, 0).noise(5.0))?.into_dataset();
    let obj = Arc::new(Objective::ridge(1.0, Arc::new(data))?);
    let inst = Instance::new(obj, Arc::new(Partitioning::single(100)), 1e-12)?;
    let family = SamplingFamily::new(SamplingVariant::Nice, inst.partitioning.clone())?;
    let eps = 1e-3;

    for tau in [1, 10, 100] {
        let s = family.at(tau)?;
        let l = expected_smoothness(&s, &inst.profile)?;
        let sigma = gradient_noise(&s, &inst.agg_star)?;
        let mut cfg = RunConfig::new(eps, 0);
        let d0 = dist_sq(&cfg.initial_point(inst.d()), &inst.x_star);
        let k = iteration_bound(l, sigma, eps, inst.mu(), d0);
        cfg.max_iters = Some(k);
        cfg.max_epochs = f64::INFINITY;
        cfg.target_rel_error = Some(0.0);
        cfg.trace_every = k / 4;
        let r = run_fixed(&inst, &s, &cfg)?;
        println!(
            "tau={tau}: gamma={:.3e} k={k} epochs={:.0} ||x-x*||^2={:.2e} (eps {eps})",
            step_size(l, sigma, eps, inst.mu(), None)?,
            r.epochs,
            r.dist_sq()
        );
    }
    Ok(())
}

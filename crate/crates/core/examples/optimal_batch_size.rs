//! Total complexity T(tau) over all batch sizes and the closed-form optimum.

use std::sync::Arc;

use adabatch::dataset::Partitioning;
use adabatch::objective::Objective;
use adabatch::optimizer::Instance;
use adabatch::sampling::{SamplingFamily, SamplingVariant};
use adabatch::synthetic::{generate, SynthSpec};
use adabatch::theory::{brute_force_tau, total_complexity};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate(&SynthSpec::new(100, 10, 1).noise(1.0))?.into_dataset();
    let obj = Arc::new(Objective::ridge(0.5, Arc::new(data))?);
    let inst = Instance::new(obj, Arc::new(Partitioning::single(100)), 1e-12)?;
    let family = SamplingFamily::new(SamplingVariant::Nice, inst.partitioning.clone())?;

    for eps in [1e-1, 1e-2, 1e-3] {
        let choice = inst.optimal_tau(&family, eps)?;
        let brute = brute_force_tau(&family, &inst.profile, &inst.agg_star, eps, inst.mu())?;
        println!("eps={eps:e}: tau*={} ({:?}), integer argmin {brute}", choice.tau, choice.rule);
        for tau in [1, 10, choice.tau, 100] {
            let c = total_complexity(&family.at(tau)?, &inst.profile, &inst.agg_star, eps, inst.mu(), None)?;
            let side = if c.noise_binding() { "noise" } else { "smoothness" };
            println!(
                "  tau={tau:>3}  L={:.4} sigma={:.3e} T/log={:.1} ({side})",
                c.expected_smoothness, c.noise, c.total
            );
        }
    }
    Ok(())
}

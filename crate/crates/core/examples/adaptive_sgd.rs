//! Adaptive batch-size SGD: watch tau^k, sigma^k and the step as the iterate approaches x*.

use std::sync::Arc;

use adabatch::dataset::Partitioning;
use adabatch::objective::Objective;
use adabatch::optimizer::{run_adaptive, trace_to_csv, Instance, RunConfig};
use adabatch::sampling::{SamplingFamily, SamplingVariant};
use adabatch::synthetic::{generate, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate(&SynthSpec::new(500, 5, 1).noise(3.0))?.into_dataset();
    let obj = Arc::new(Objective::ridge(1.0, Arc::new(data))?);
    let inst = Instance::new(obj, Arc::new(Partitioning::single(500)), 1e-12)?;
    let family = SamplingFamily::new(SamplingVariant::Nice, inst.partitioning.clone())?;
    let eps = 0.1;

    let mut cfg = RunConfig::new(eps, 0);
    cfg.trace_every = 10;
    let r = run_adaptive(&inst, &family, &cfg)?;
    println!("tau(x*) = {}", inst.optimal_tau(&family, eps)?.tau);
    println!("reached rel error {} after {:?} epochs ({} iterations)", cfg.target(), r.epochs_to_target, r.iterations);
    for row in r.trace.iter().step_by((r.trace.len() / 8).max(1)) {
        println!(
            "  iter {:>5} epochs {:>6.2} rel {:.2e} tau {:>3} gamma {:.3e} sigma {:.3e}",
            row.iter, row.epochs, row.rel_error, row.tau, row.gamma, row.sigma
        );
    }
    let path = std::env::temp_dir().join("adabatch-adaptive-trace.csv");
    std::fs::write(&path, trace_to_csv(&r.trace))?;
    println!("trace written to {}", path.display());
    Ok(())
}

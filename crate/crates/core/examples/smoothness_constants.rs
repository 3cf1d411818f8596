//! Smoothness and strong-convexity constants for ridge and logistic objectives.

use std::sync::Arc;

use adabatch::dataset::{make_partitioning, PartitionOptions, PartitionSpec};
use adabatch::objective::Objective;
use adabatch::synthetic::{generate, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SynthSpec::new(60, 8, 3).noise(0.2).normalize(false);
    let part = make_partitioning(60, &PartitionSpec::Sizes(vec![20, 40]), &PartitionOptions::default())?;

    let ridge = Objective::ridge(0.1, Arc::new(generate(&spec)?.into_dataset()))?;
    let logistic = Objective::logistic(0.1, Arc::new(generate(&spec.clone().binary(true))?.into_dataset()))?;
    for (name, obj) in [("ridge", ridge), ("logistic", logistic)] {
        let p = obj.smoothness_profile(&part)?;
        println!("{name}: L={:.4} Lmax={:.4} mu={}", p.l, p.l_max(), p.mu);
        println!("  per block: L_C={:?} Lmax_C={:?}", p.l_c, p.lmax_c);
        let x_star = obj.solve_reference(1e-10)?;
        println!("  f(x*)={:.6}", obj.value(&x_star));
    }
    Ok(())
}

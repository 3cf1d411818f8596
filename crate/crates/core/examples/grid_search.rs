//! Fixed-batch runs over every tau against one adaptive run with the same seed.

use std::sync::Arc;

use adabatch::cli::grid_to_csv;
use adabatch::dataset::Partitioning;
use adabatch::objective::Objective;
use adabatch::optimizer::{grid_percentile, grid_search, run_adaptive, Instance, RunConfig};
use adabatch::sampling::{SamplingFamily, SamplingVariant};
use adabatch::synthetic::{generate, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate(&SynthSpec::new(500, 5, 1).noise(3.0))?.into_dataset();
    let obj = Arc::new(Objective::ridge(1.0, Arc::new(data))?);
    let inst = Instance::new(obj, Arc::new(Partitioning::single(500)), 1e-12)?;
    let family = SamplingFamily::new(SamplingVariant::Nice, inst.partitioning.clone())?;

    let mut cfg = RunConfig::new(0.1, 3);
    cfg.max_epochs = 100.0;
    let taus: Vec<usize> = (1..=family.max_tau()).collect();
    let grid = grid_search(&inst, &family, &taus, &cfg)?;
    let adaptive = run_adaptive(&inst, &family, &cfg)?;
    let epochs = adaptive.epochs_to_target.unwrap_or(f64::INFINITY);

    let best = grid.iter().min_by(|a, b| a.epochs.total_cmp(&b.epochs)).unwrap();
    println!("best fixed tau={} at {:.2} epochs", best.tau, best.epochs);
    println!("adaptive: {epochs:.2} epochs; {:.0}% of the grid was faster", grid_percentile(&grid, epochs));
    let path = std::env::temp_dir().join("adabatch-grid.csv");
    std::fs::write(&path, grid_to_csv(&grid))?;
    println!("grid written to {}", path.display());
    Ok(())
}

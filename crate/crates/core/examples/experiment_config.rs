//! Build an experiment from `key = value` text, the same format `--config` reads.

use adabatch::cli::{estimate_table, parse_config, ExperimentConfig};

const CONFIG: &str = "
# partitioned ridge problem
synth_n    = 30
synth_d    = 4
synth_noise = 1.5
lambda     = 0.2
partitions = 10,20
q          = uniform
sampling   = pnice
eps        = 1e-3
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_map(&parse_config(CONFIG)?)?;
    let inst = cfg.instance()?;
    print!("{}", estimate_table(&cfg, &inst)?);
    Ok(())
}

//! Draw mini-batches from each sampling variant and show their weights.

use std::sync::Arc;

use adabatch::dataset::{make_partitioning, PartitionOptions, PartitionSpec, Partitioning};
use adabatch::sampling::{DrawScratch, SamplingFamily, SamplingVariant};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 12;
    let opts = PartitionOptions { probs: Some(vec![0.2, 0.3, 0.5]), ..Default::default() };
    let split = Arc::new(make_partitioning(n, &PartitionSpec::Uniform(3), &opts)?);
    let single = Arc::new(Partitioning::single(n));
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    for v in SamplingVariant::ALL {
        let part = if v.is_partitioned() { split.clone() } else { single.clone() };
        let family = SamplingFamily::new(v, part.clone())?;
        let s = family.at(2)?;
        let mut scratch = DrawScratch::new(&part);
        println!("{v} (tau=2, max tau {}, E|S|={:.2}):", family.max_tau(), s.expected_cardinality());
        for _ in 0..3 {
            let d = s.draw_with(&mut rng, &mut scratch);
            let pairs: Vec<String> = d.iter().map(|(i, w)| format!("{i}:{w:.2}")).collect();
            println!("  block {} -> [{}]", d.block, pairs.join(" "));
        }
    }
    Ok(())
}

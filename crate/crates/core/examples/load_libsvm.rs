//! Read a LIBSVM file, normalize rows and split the examples into blocks.
//!
//! cargo run --example load_libsvm -- [path] [K]

use adabatch::dataset::{make_partitioning, read_libsvm, PartitionOptions, PartitionSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/tiny.svm").to_string());
    let k: usize = args.next().map_or(Ok(2), |s| s.parse())?;

    let data = read_libsvm(&path, None)?.normalize_rows();
    println!("{path}: n={} d={}", data.n(), data.d());
    let nnz: usize = data.rows().iter().map(|r| r.nnz()).sum();
    println!("nonzeros: {nnz}");

    let opts = PartitionOptions { shuffle_seed: Some(1), ..Default::default() };
    let part = make_partitioning(data.n(), &PartitionSpec::Uniform(k), &opts)?;
    for j in 0..part.num_blocks() {
        println!("block {j}: q={:.3} members {:?}", part.prob(j), part.set(j));
    }
    Ok(())
}

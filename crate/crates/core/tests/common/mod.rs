#![allow(dead_code)]

use std::sync::Arc;

use adabatch::dataset::{make_partitioning, PartitionOptions, PartitionSpec, Partitioning};
use adabatch::objective::{Objective, ObjectiveKind};
use adabatch::optimizer::Instance;
use adabatch::synthetic::{generate, SynthSpec};

pub fn objective(kind: ObjectiveKind, spec: &SynthSpec, lambda: f64) -> Arc<Objective> {
    let spec = spec.clone().binary(kind == ObjectiveKind::Logistic);
    let data = Arc::new(generate(&spec).unwrap().into_dataset());
    Arc::new(Objective::new(kind, lambda, data).unwrap())
}

pub fn instance(kind: ObjectiveKind, spec: &SynthSpec, lambda: f64, part: Partitioning) -> Instance {
    let obj = objective(kind, spec, lambda);
    Instance::new(obj, Arc::new(part), 1e-12).unwrap()
}

pub fn ridge(spec: &SynthSpec, lambda: f64, blocks: usize) -> Instance {
    let part = make_partitioning(spec.n, &PartitionSpec::Uniform(blocks), &PartitionOptions::default()).unwrap();
    instance(ObjectiveKind::Ridge, spec, lambda, part)
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

//! Synthetic linear-model data: `b_i = a_i . x_bar + noise * e_i`.
//!
//! With `noise = 0` every component can be fit exactly, so the ridge
//! gradient noise at the optimum vanishes as `lambda -> 0`, and is exactly
//! zero when `signal = 0` as well.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    /// Standard deviation of the label noise.
    pub noise: f64,
    /// Scale of the planted model `x_bar ~ N(0, signal^2 I)`.
    pub signal: f64,
    /// Scale rows to unit norm.
    pub normalize: bool,
    /// Emit `sign(b_i)` labels for logistic regression.
    pub binary: bool,
}

impl SynthSpec {
    pub fn new(n: usize, d: usize, seed: u64) -> Self {
        SynthSpec { n, d, seed, noise: 0.0, signal: 1.0, normalize: true, binary: false }
    }

    pub fn noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn signal(mut self, signal: f64) -> Self {
        self.signal = signal;
        self
    }

    pub fn normalize(mut self, on: bool) -> Self {
        self.normalize = on;
        self
    }

    pub fn binary(mut self, on: bool) -> Self {
        self.binary = on;
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Synthetic {
    pub spec: SynthSpec,
    pub x_bar: Vec<f64>,
    #[serde(skip)]
    pub data: Option<Dataset>,
}

/// Draws a dataset. Same spec, same bytes.
pub fn generate(spec: &SynthSpec) -> Result<Synthetic, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let x_bar: Vec<f64> = (0..spec.d).map(|_| spec.signal * normal()).collect();
    let mut rows = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let mut a: Vec<f64> = (0..spec.d).map(|_| normal()).collect();
        if spec.normalize {
            let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                a.iter_mut().for_each(|v| *v /= norm);
            }
        }
        let clean: f64 = a.iter().zip(&x_bar).map(|(u, v)| u * v).sum();
        let e = normal();
        let b = clean + spec.noise * e;
        labels.push(if spec.binary {
            if b >= 0.0 {
                1.0
            } else {
                -1.0
            }
        } else {
            b
        });
        rows.push(a);
    }
    let data = Dataset::from_dense(&rows, labels)?;
    Ok(Synthetic { spec: spec.clone(), x_bar, data: Some(data) })
}

impl Synthetic {
    pub fn dataset(&self) -> &Dataset {
        self.data.as_ref().expect("synthetic data present")
    }

    pub fn into_dataset(self) -> Dataset {
        self.data.expect("synthetic data present")
    }

    /// Writes `<path>` in LIBSVM format and `<path>.json` with the spec and `x_bar`.
    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        self.dataset().write_libsvm(path)?;
        let json = serde_json::to_string_pretty(self).expect("serializable");
        std::fs::write(sidecar_path(path), json + "\n")?;
        Ok(())
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

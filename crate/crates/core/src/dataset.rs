//! Sparse LIBSVM datasets and index partitionings.
//!
//! Rows are stored as parallel index/value vectors with 0-based, strictly
//! increasing feature indices. The text format uses 1-based indices:
//!
//! ```text
//! <label> <idx>:<val> <idx>:<val> ...
//! ```
//!
//! Blank lines and lines starting with `#` are skipped; trailing `# ...`
//! comments on a data line are ignored as well.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("empty dataset: no examples found")]
    Empty,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: non-increasing feature index {index}")]
    NonIncreasing { line: usize, index: usize },
    #[error("line {line}: feature index {index} exceeds dimension {dim}")]
    IndexOutOfRange { line: usize, index: usize, dim: usize },
    #[error("invalid partitioning: {0}")]
    Partition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A sparse row `a_i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseRow {
    /// Builds a row from `(index, value)` pairs; indices must be strictly increasing.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Self {
        debug_assert!(pairs.windows(2).all(|w| w[0].0 < w[1].0));
        SparseRow { indices: pairs.iter().map(|p| p.0).collect(), values: pairs.iter().map(|p| p.1).collect() }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    #[inline]
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.iter().map(|(j, v)| v * x[j]).sum()
    }

    /// `y += alpha * a`
    #[inline]
    pub fn axpy_into(&self, alpha: f64, y: &mut [f64]) {
        for (j, v) in self.iter() {
            y[j] += alpha * v;
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// `n` labelled sparse examples in dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    rows: Vec<SparseRow>,
    labels: Vec<f64>,
}

impl Dataset {
    /// Validates and assembles a dataset.
    pub fn new(d: usize, rows: Vec<SparseRow>, labels: Vec<f64>) -> Result<Self, DatasetError> {
        if rows.is_empty() {
            return Err(DatasetError::Empty);
        }
        if d == 0 {
            return Err(DatasetError::Partition("feature dimension must be >= 1".into()));
        }
        if rows.len() != labels.len() {
            return Err(DatasetError::Parse {
                line: 0,
                msg: format!("{} rows but {} labels", rows.len(), labels.len()),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.indices.len() != row.values.len() {
                return Err(DatasetError::Parse { line: i + 1, msg: "index/value length mismatch".into() });
            }
            for w in row.indices.windows(2) {
                if w[0] >= w[1] {
                    return Err(DatasetError::NonIncreasing { line: i + 1, index: w[1] + 1 });
                }
            }
            if let Some(&last) = row.indices.last() {
                if last >= d {
                    return Err(DatasetError::IndexOutOfRange { line: i + 1, index: last + 1, dim: d });
                }
            }
        }
        Ok(Dataset { d, rows, labels })
    }

    /// Dense constructor, mostly for tests and small synthetic instances.
    pub fn from_dense(rows: &[Vec<f64>], labels: Vec<f64>) -> Result<Self, DatasetError> {
        let d = rows.first().map_or(0, Vec::len);
        let sparse = rows
            .iter()
            .map(|r| {
                let pairs: Vec<(usize, f64)> = r.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect();
                SparseRow::from_pairs(&pairs)
            })
            .collect();
        Dataset::new(d, sparse, labels)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &SparseRow {
        &self.rows[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Scales every nonzero row to unit Euclidean norm. Zero rows are kept.
    pub fn normalize_rows(mut self) -> Self {
        for row in &mut self.rows {
            let norm = row.norm_sq().sqrt();
            if norm > 0.0 {
                row.values.iter_mut().for_each(|v| *v /= norm);
            }
        }
        self
    }

    /// Serializes in LIBSVM text form. Values use the shortest round-trip
    /// representation so that `parse_libsvm(to_libsvm())` is exact.
    pub fn to_libsvm(&self) -> String {
        let mut out = String::new();
        for (row, b) in self.rows.iter().zip(&self.labels) {
            write!(out, "{b}").unwrap();
            for (j, v) in row.iter() {
                write!(out, " {}:{}", j + 1, v).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_libsvm(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        std::fs::write(path, self.to_libsvm())?;
        Ok(())
    }
}

/// Parses LIBSVM text. `dim` overrides the inferred feature dimension
/// (maximum 1-based index seen) and must cover every index present.
pub fn parse_libsvm(text: &str, dim: Option<usize>) -> Result<Dataset, DatasetError> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().unwrap();
        let label: f64 = label_tok
            .parse()
            .map_err(|_| DatasetError::Parse { line: line_no, msg: format!("bad label `{label_tok}`") })?;

        let mut pairs: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| DatasetError::Parse {
                line: line_no,
                msg: format!("expected `index:value`, got `{tok}`"),
            })?;
            let idx: usize = idx
                .parse()
                .map_err(|_| DatasetError::Parse { line: line_no, msg: format!("bad feature index `{idx}`") })?;
            if idx == 0 {
                return Err(DatasetError::Parse { line: line_no, msg: "feature indices are 1-based".into() });
            }
            let val: f64 = val
                .parse()
                .map_err(|_| DatasetError::Parse { line: line_no, msg: format!("bad feature value `{val}`") })?;
            if let Some(&(prev, _)) = pairs.last() {
                if idx - 1 <= prev {
                    return Err(DatasetError::NonIncreasing { line: line_no, index: idx });
                }
            }
            if let Some(d) = dim {
                if idx > d {
                    return Err(DatasetError::IndexOutOfRange { line: line_no, index: idx, dim: d });
                }
            }
            max_index = max_index.max(idx);
            pairs.push((idx - 1, val));
        }
        rows.push(SparseRow::from_pairs(&pairs));
        labels.push(label);
    }

    if rows.is_empty() {
        return Err(DatasetError::Empty);
    }
    let d = dim.unwrap_or(max_index).max(1);
    Dataset::new(d, rows, labels)
}

pub fn read_libsvm(path: impl AsRef<Path>, dim: Option<usize>) -> Result<Dataset, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    parse_libsvm(&text, dim)
}

/// How to split `{0..n-1}` into blocks.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionSpec {
    /// `K` contiguous blocks whose sizes differ by at most one.
    Uniform(usize),
    /// Explicit block sizes, in order.
    Sizes(Vec<usize>),
}

impl PartitionSpec {
    /// Parses `"3"` (uniform) or `"40,60"` (explicit sizes).
    pub fn parse(s: &str) -> Result<Self, DatasetError> {
        let parts: Vec<&str> = s.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
        let nums: Result<Vec<usize>, _> = parts.iter().map(|p| p.parse::<usize>()).collect();
        let nums = nums.map_err(|_| DatasetError::Partition(format!("cannot parse `{s}`")))?;
        match nums.as_slice() {
            [] => Err(DatasetError::Partition("empty partition spec".into())),
            [k] => Ok(PartitionSpec::Uniform(*k)),
            _ => Ok(PartitionSpec::Sizes(nums)),
        }
    }
}

/// Disjoint cover of `{0..n-1}` with selection probabilities `q_Cj`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partitioning {
    sets: Vec<Vec<usize>>,
    probs: Vec<f64>,
    owner: Vec<usize>,
}

impl Partitioning {
    /// Validates an explicit set of blocks and probabilities.
    pub fn new(n: usize, sets: Vec<Vec<usize>>, probs: Vec<f64>) -> Result<Self, DatasetError> {
        if sets.is_empty() {
            return Err(DatasetError::Partition("no blocks".into()));
        }
        if sets.len() != probs.len() {
            return Err(DatasetError::Partition(format!("{} blocks but {} probabilities", sets.len(), probs.len())));
        }
        let mut owner = vec![usize::MAX; n];
        for (j, set) in sets.iter().enumerate() {
            if set.is_empty() {
                return Err(DatasetError::Partition(format!("block {j} is empty")));
            }
            for &i in set {
                if i >= n {
                    return Err(DatasetError::Partition(format!("index {i} out of range for n={n}")));
                }
                if owner[i] != usize::MAX {
                    return Err(DatasetError::Partition(format!("index {i} assigned twice")));
                }
                owner[i] = j;
            }
        }
        if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(DatasetError::Partition(format!("index {i} not covered")));
        }
        if probs.iter().any(|&q| !(q > 0.0) || !q.is_finite()) {
            return Err(DatasetError::Partition("every q_Cj must be positive".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DatasetError::Partition(format!("q sums to {total}, expected 1")));
        }
        Ok(Partitioning { sets, probs, owner })
    }

    /// One block holding every index, `q = [1]`.
    pub fn single(n: usize) -> Self {
        Partitioning { sets: vec![(0..n).collect()], probs: vec![1.0], owner: vec![0; n] }
    }

    pub fn n(&self) -> usize {
        self.owner.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn set(&self, j: usize) -> &[usize] {
        &self.sets[j]
    }

    pub fn size(&self, j: usize) -> usize {
        self.sets[j].len()
    }

    pub fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.sets.iter().map(Vec::len)
    }

    pub fn min_size(&self) -> usize {
        self.sizes().min().unwrap_or(0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, j: usize) -> f64 {
        self.probs[j]
    }

    /// Block containing example `i`.
    pub fn owner(&self, i: usize) -> usize {
        self.owner[i]
    }

    /// `e_Cj = q_Cj (n_Cj - 1)`.
    pub fn e(&self, j: usize) -> f64 {
        self.probs[j] * (self.size(j) as f64 - 1.0)
    }
}

/// Options for [`make_partitioning`].
#[derive(Debug, Clone, Default)]
pub struct PartitionOptions {
    /// Explicit `q_Cj`; defaults to `n_Cj / n`.
    pub probs: Option<Vec<f64>>,
    /// Use `q_Cj = 1/K` instead of the proportional default.
    pub uniform_probs: bool,
    /// Shuffle example-to-block assignment with this seed.
    pub shuffle_seed: Option<u64>,
}

/// Splits `{0..n-1}` according to `spec`.
pub fn make_partitioning(
    n: usize,
    spec: &PartitionSpec,
    opts: &PartitionOptions,
) -> Result<Partitioning, DatasetError> {
    let sizes = match spec {
        PartitionSpec::Uniform(k) => {
            let k = *k;
            if k == 0 {
                return Err(DatasetError::Partition("K must be >= 1".into()));
            }
            if k > n {
                return Err(DatasetError::Partition(format!("K={k} exceeds n={n}")));
            }
            let (base, extra) = (n / k, n % k);
            (0..k).map(|j| base + usize::from(j < extra)).collect::<Vec<_>>()
        }
        PartitionSpec::Sizes(sizes) => {
            if sizes.iter().any(|&s| s < 1) {
                return Err(DatasetError::Partition("every block needs at least one example".into()));
            }
            let total: usize = sizes.iter().sum();
            if total != n {
                return Err(DatasetError::Partition(format!("sizes sum to {total}, expected n={n}")));
            }
            sizes.clone()
        }
    };

    let mut order: Vec<usize> = (0..n).collect();
    if let Some(seed) = opts.shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut sets = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &s in &sizes {
        let mut block = order[start..start + s].to_vec();
        block.sort_unstable();
        sets.push(block);
        start += s;
    }

    let probs = match (&opts.probs, opts.uniform_probs) {
        (Some(q), _) => q.clone(),
        (None, true) => vec![1.0 / sizes.len() as f64; sizes.len()],
        (None, false) => {
            let mut q: Vec<f64> = sizes.iter().map(|&s| s as f64 / n as f64).collect();
            // absorb rounding so that the sum is 1 to the last ulp
            let drift: f64 = 1.0 - q.iter().sum::<f64>();
            q[0] += drift;
            q
        }
    };
    Partitioning::new(n, sets, probs)
}

//! The four mini-batch distributions and their unbiased weights.
//!
//! Every strategy is expressed over a [`Partitioning`]; the plain `Nice` and
//! `Independent` variants use a single block holding all `n` examples. A draw
//! first picks block `C_j` with probability `q_Cj` (trivially for one block)
//! and then samples inside it. Weights are chosen so that `E[v_i] = 1`:
//!
//! | variant                 | `v_i` for `i` in `S`      |
//! |-------------------------|---------------------------|
//! | nice / partition nice   | `n_Cj / (q_Cj * tau)`     |
//! | independent / partition | `1 / (q_Cj * p_i)`        |

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::dataset::Partitioning;
use crate::objective::Objective;

/// Enumeration is refused beyond this many outcomes.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("batch size tau={tau} infeasible: must satisfy 1 <= tau <= {max}")]
    InfeasibleTau { tau: usize, max: usize },
    #[error("block {block} has a single example; nice sampling needs n_Cj >= 2")]
    SingletonBlock { block: usize },
    #[error("{variant} sampling needs a single block, got {blocks}")]
    NotSinglePartition { variant: SamplingVariant, blocks: usize },
    #[error("invalid inclusion probabilities: {0}")]
    InvalidProbs(String),
    #[error("support has {count} outcomes, above the enumeration limit of {ENUMERATION_LIMIT}; use Monte Carlo draws on a smaller instance")]
    TooLarge { count: u128 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingVariant {
    Nice,
    Independent,
    #[serde(rename = "pnice")]
    PartitionNice,
    #[serde(rename = "pindependent")]
    PartitionIndependent,
}

impl SamplingVariant {
    pub const ALL: [SamplingVariant; 4] = [
        SamplingVariant::Nice,
        SamplingVariant::Independent,
        SamplingVariant::PartitionNice,
        SamplingVariant::PartitionIndependent,
    ];

    pub fn is_nice(self) -> bool {
        matches!(self, SamplingVariant::Nice | SamplingVariant::PartitionNice)
    }

    pub fn is_partitioned(self) -> bool {
        matches!(self, SamplingVariant::PartitionNice | SamplingVariant::PartitionIndependent)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SamplingVariant::Nice => "nice",
            SamplingVariant::Independent => "independent",
            SamplingVariant::PartitionNice => "pnice",
            SamplingVariant::PartitionIndependent => "pindependent",
        }
    }
}

impl fmt::Display for SamplingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplingVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "nice" => Ok(SamplingVariant::Nice),
            "independent" | "ind" => Ok(SamplingVariant::Independent),
            "pnice" | "partitionnice" => Ok(SamplingVariant::PartitionNice),
            "pindependent" | "partitionindependent" | "pind" => Ok(SamplingVariant::PartitionIndependent),
            _ => Err(format!("unknown sampling `{s}` (expected nice|independent|pnice|pindependent)")),
        }
    }
}

/// Inclusion probabilities for the independent variants.
#[derive(Debug, Clone, PartialEq)]
pub enum InclusionProbs {
    /// `p_i = tau / n_Cj` for `i` in `C_j`.
    Proportional,
    Explicit(Arc<[f64]>),
}

/// A sampling variant bound to a partitioning; [`SamplingFamily::at`] fixes `tau`.
#[derive(Debug, Clone)]
pub struct SamplingFamily {
    variant: SamplingVariant,
    partitioning: Arc<Partitioning>,
}

impl SamplingFamily {
    pub fn new(variant: SamplingVariant, partitioning: Arc<Partitioning>) -> Result<Self, SamplingError> {
        if !variant.is_partitioned() && partitioning.num_blocks() != 1 {
            return Err(SamplingError::NotSinglePartition { variant, blocks: partitioning.num_blocks() });
        }
        if variant.is_nice() && partitioning.n() > 1 {
            if let Some(block) = partitioning.sizes().position(|s| s < 2) {
                return Err(SamplingError::SingletonBlock { block });
            }
        }
        Ok(SamplingFamily { variant, partitioning })
    }

    pub fn variant(&self) -> SamplingVariant {
        self.variant
    }

    pub fn partitioning(&self) -> &Arc<Partitioning> {
        &self.partitioning
    }

    /// Largest feasible batch size, `min_j n_Cj`.
    pub fn max_tau(&self) -> usize {
        self.partitioning.min_size()
    }

    /// Strategy with batch size `tau` and proportional `p_i` for the independent variants.
    pub fn at(&self, tau: usize) -> Result<SamplingStrategy, SamplingError> {
        let max = self.max_tau();
        if tau < 1 || tau > max {
            return Err(SamplingError::InfeasibleTau { tau, max });
        }
        Ok(SamplingStrategy {
            variant: self.variant,
            tau,
            probs: InclusionProbs::Proportional,
            partitioning: self.partitioning.clone(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SamplingStrategy {
    variant: SamplingVariant,
    tau: usize,
    probs: InclusionProbs,
    partitioning: Arc<Partitioning>,
}

impl SamplingStrategy {
    /// `tau`-nice sampling over all `n` examples.
    pub fn nice(n: usize, tau: usize) -> Result<Self, SamplingError> {
        SamplingFamily::new(SamplingVariant::Nice, Arc::new(Partitioning::single(n)))?.at(tau)
    }

    /// Independent sampling over all `n` examples with `p_i = tau / n`.
    pub fn independent(n: usize, tau: usize) -> Result<Self, SamplingError> {
        SamplingFamily::new(SamplingVariant::Independent, Arc::new(Partitioning::single(n)))?.at(tau)
    }

    pub fn partition_nice(part: Arc<Partitioning>, tau: usize) -> Result<Self, SamplingError> {
        SamplingFamily::new(SamplingVariant::PartitionNice, part)?.at(tau)
    }

    pub fn partition_independent(part: Arc<Partitioning>, tau: usize) -> Result<Self, SamplingError> {
        SamplingFamily::new(SamplingVariant::PartitionIndependent, part)?.at(tau)
    }

    /// Independent variant with caller-supplied `p_i`. Within every block the
    /// probabilities must sum to `tau`.
    pub fn with_probs(
        variant: SamplingVariant,
        part: Arc<Partitioning>,
        tau: usize,
        probs: Vec<f64>,
    ) -> Result<Self, SamplingError> {
        if variant.is_nice() {
            return Err(SamplingError::InvalidProbs(format!("{variant} sampling has no p_i")));
        }
        let family = SamplingFamily::new(variant, part)?;
        let part = family.partitioning;
        if probs.len() != part.n() {
            return Err(SamplingError::InvalidProbs(format!("{} values for n={}", probs.len(), part.n())));
        }
        if let Some(i) = probs.iter().position(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(SamplingError::InvalidProbs(format!("p_{i} = {} outside (0, 1]", probs[i])));
        }
        for (j, set) in part.sets().iter().enumerate() {
            let s: f64 = set.iter().map(|&i| probs[i]).sum();
            if (s - tau as f64).abs() > 1e-9 * (tau as f64).max(1.0) {
                return Err(SamplingError::InvalidProbs(format!("block {j} sums to {s}, expected tau={tau}")));
            }
        }
        Ok(SamplingStrategy { variant, tau, probs: InclusionProbs::Explicit(probs.into()), partitioning: part })
    }

    pub fn variant(&self) -> SamplingVariant {
        self.variant
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn n(&self) -> usize {
        self.partitioning.n()
    }

    pub fn partitioning(&self) -> &Arc<Partitioning> {
        &self.partitioning
    }

    pub fn probs(&self) -> &InclusionProbs {
        &self.probs
    }

    /// Inclusion probability of `i` within its own block (independent variants).
    #[inline]
    pub fn p(&self, i: usize) -> f64 {
        match &self.probs {
            InclusionProbs::Proportional => self.tau as f64 / self.partitioning.size(self.partitioning.owner(i)) as f64,
            InclusionProbs::Explicit(p) => p[i],
        }
    }

    /// Weight `v_i` assigned to `i` when `i` is drawn from block `j`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        let j = self.partitioning.owner(i);
        let q = self.partitioning.prob(j);
        if self.variant.is_nice() {
            self.partitioning.size(j) as f64 / (q * self.tau as f64)
        } else {
            1.0 / (q * self.p(i))
        }
    }

    /// `E|S| = sum_j q_Cj E[|S| | C_j]`.
    pub fn expected_cardinality(&self) -> f64 {
        let part = &self.partitioning;
        (0..part.num_blocks())
            .map(|j| {
                let inner =
                    if self.variant.is_nice() { self.tau as f64 } else { part.set(j).iter().map(|&i| self.p(i)).sum() };
                part.prob(j) * inner
            })
            .sum()
    }

    fn choose_block<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let probs = self.partitioning.probs();
        if probs.len() == 1 {
            return 0;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (j, &q) in probs.iter().enumerate() {
            acc += q;
            if u < acc {
                return j;
            }
        }
        probs.len() - 1
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SampleDraw {
        let mut scratch = DrawScratch::new(&self.partitioning);
        self.draw_with(rng, &mut scratch)
    }

    /// Draw reusing per-block permutation buffers.
    pub fn draw_with<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut DrawScratch) -> SampleDraw {
        let j = self.choose_block(rng);
        let mut indices = if self.variant.is_nice() {
            let perm = &mut scratch.perms[j];
            let (chosen, _) = perm.partial_shuffle(rng, self.tau);
            chosen.to_vec()
        } else {
            self.partitioning.set(j).iter().copied().filter(|&i| rng.random::<f64>() < self.p(i)).collect()
        };
        indices.sort_unstable();
        let weights = indices.iter().map(|&i| self.weight(i)).collect();
        SampleDraw { block: j, indices, weights }
    }

    /// Number of outcomes [`enumerate`](Self::enumerate) would produce.
    pub fn support_size(&self) -> u128 {
        self.partitioning
            .sizes()
            .map(|m| if self.variant.is_nice() { binomial(m as u128, self.tau as u128) } else { pow2(m) })
            .fold(0u128, u128::saturating_add)
    }

    /// Full support with probabilities. Zero-probability outcomes are omitted.
    pub fn enumerate(&self) -> Result<Vec<(SampleDraw, f64)>, SamplingError> {
        let count = self.support_size();
        if count > ENUMERATION_LIMIT {
            return Err(SamplingError::TooLarge { count });
        }
        let part = &self.partitioning;
        let mut out = Vec::with_capacity(count as usize);
        for (j, set) in part.sets().iter().enumerate() {
            let q = part.prob(j);
            if self.variant.is_nice() {
                let p = q / binomial(set.len() as u128, self.tau as u128) as f64;
                for combo in set.iter().copied().combinations(self.tau) {
                    out.push((self.make_draw(j, combo), p));
                }
            } else {
                for mask in 0u64..(1u64 << set.len()) {
                    let mut prob = q;
                    let mut chosen = Vec::new();
                    for (bit, &i) in set.iter().enumerate() {
                        let pi = self.p(i);
                        if mask >> bit & 1 == 1 {
                            prob *= pi;
                            chosen.push(i);
                        } else {
                            prob *= 1.0 - pi;
                        }
                    }
                    if prob > 0.0 {
                        out.push((self.make_draw(j, chosen), prob));
                    }
                }
            }
        }
        Ok(out)
    }

    fn make_draw(&self, block: usize, indices: Vec<usize>) -> SampleDraw {
        let weights = indices.iter().map(|&i| self.weight(i)).collect();
        SampleDraw { block, indices, weights }
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn pow2(m: usize) -> u128 {
    if m >= 127 {
        u128::MAX
    } else {
        1u128 << m
    }
}

/// Per-block index buffers for partial Fisher-Yates shuffles.
#[derive(Debug, Clone)]
pub struct DrawScratch {
    perms: Vec<Vec<usize>>,
}

impl DrawScratch {
    pub fn new(part: &Partitioning) -> Self {
        DrawScratch { perms: part.sets().to_vec() }
    }
}

/// A realized mini-batch `S` with weights `v_i` (zero off `S`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDraw {
    pub block: usize,
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl SampleDraw {
    /// Every index with unit weight; equivalent to a full gradient.
    pub fn full(n: usize) -> Self {
        SampleDraw { block: 0, indices: (0..n).collect(), weights: vec![1.0; n] }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `grad f_v(x) = (1/n) sum_{i in S} v_i grad f_i(x)`.
pub fn stochastic_gradient(obj: &Objective, draw: &SampleDraw, x: &[f64]) -> Vec<f64> {
    let n = obj.n() as f64;
    let mut g = vec![0.0; obj.d()];
    let mut gi = vec![0.0; obj.d()];
    for (i, v) in draw.iter() {
        obj.component_gradient_into(i, x, &mut gi);
        crate::linalg::axpy(v / n, &gi, &mut g);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{make_partitioning, PartitionOptions, PartitionSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn blocks(n: usize, sizes: &[usize]) -> Arc<Partitioning> {
        Arc::new(make_partitioning(n, &PartitionSpec::Sizes(sizes.to_vec()), &PartitionOptions::default()).unwrap())
    }

    #[test]
    fn full_nice_is_deterministic() {
        let s = SamplingStrategy::nice(5, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = s.draw(&mut rng);
        assert_eq!(d.indices, vec![0, 1, 2, 3, 4]);
        assert!(d.weights.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn nice_four_choose_two() {
        let s = SamplingStrategy::nice(4, 2).unwrap();
        let support = s.enumerate().unwrap();
        assert_eq!(support.len(), 6);
        for (d, p) in &support {
            assert!((p - 1.0 / 6.0).abs() < 1e-15);
            assert_eq!(d.len(), 2);
            assert!(d.weights.iter().all(|&v| v == 2.0));
        }
    }

    #[test]
    fn independent_unit_probabilities_include_everything() {
        let part = Arc::new(Partitioning::single(3));
        let s = SamplingStrategy::with_probs(SamplingVariant::Independent, part, 3, vec![1.0; 3]).unwrap();
        let d = s.draw(&mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(d.indices, vec![0, 1, 2]);
        assert!(d.weights.iter().all(|&v| v == 1.0));
        assert_eq!(s.enumerate().unwrap().len(), 1);
    }

    #[test]
    fn independent_product_law() {
        let s = SamplingStrategy::independent(2, 1).unwrap();
        let support = s.enumerate().unwrap();
        assert_eq!(support.len(), 4);
        assert!(support.iter().all(|(_, p)| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn partition_nice_product_of_block_and_subset() {
        let s = SamplingStrategy::partition_nice(blocks(4, &[2, 2]), 1).unwrap();
        let support = s.enumerate().unwrap();
        assert_eq!(support.len(), 4);
        assert!(support.iter().all(|(_, p)| (p - 0.25).abs() < 1e-15));
        // v_i = n_Cj / (q tau) = 2 / 0.5
        assert!(support.iter().all(|(d, _)| d.weights == vec![4.0]));
    }

    #[test]
    fn expected_cardinality_is_tau() {
        let part = blocks(7, &[3, 4]);
        for tau in 1..=3 {
            for v in SamplingVariant::ALL {
                let s = if v.is_partitioned() {
                    SamplingFamily::new(v, part.clone()).unwrap().at(tau).unwrap()
                } else {
                    SamplingFamily::new(v, Arc::new(Partitioning::single(7))).unwrap().at(tau).unwrap()
                };
                assert!((s.expected_cardinality() - tau as f64).abs() < 1e-12, "{v} tau={tau}");
            }
        }
    }

    #[test]
    fn feasibility_checks() {
        assert!(matches!(SamplingStrategy::nice(4, 0), Err(SamplingError::InfeasibleTau { .. })));
        assert!(matches!(SamplingStrategy::nice(4, 5), Err(SamplingError::InfeasibleTau { .. })));
        assert!(matches!(
            SamplingStrategy::partition_nice(blocks(5, &[1, 4]), 1),
            Err(SamplingError::SingletonBlock { block: 0 })
        ));
        // independent variants tolerate singleton blocks
        assert!(SamplingStrategy::partition_independent(blocks(5, &[1, 4]), 1).is_ok());
        assert!(matches!(
            SamplingFamily::new(SamplingVariant::Nice, blocks(4, &[2, 2])),
            Err(SamplingError::NotSinglePartition { .. })
        ));
        let part = Arc::new(Partitioning::single(3));
        assert!(SamplingStrategy::with_probs(SamplingVariant::Independent, part.clone(), 2, vec![0.5; 3]).is_err());
        assert!(SamplingStrategy::with_probs(SamplingVariant::Independent, part, 1, vec![0.0, 0.5, 0.5]).is_err());
        assert!(SamplingStrategy::nice(1, 1).is_ok());
    }

    #[test]
    fn enumeration_limit() {
        let s = SamplingStrategy::nice(40, 20).unwrap();
        assert!(matches!(s.enumerate(), Err(SamplingError::TooLarge { .. })));
        let s = SamplingStrategy::independent(30, 3).unwrap();
        assert!(matches!(s.enumerate(), Err(SamplingError::TooLarge { .. })));
    }

    #[test]
    fn independent_draw_can_be_empty() {
        let s = SamplingStrategy::independent(6, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let empties = (0..2000).filter(|_| s.draw(&mut rng).is_empty()).count();
        // P(empty) = (5/6)^6 ~ 0.335
        assert!(empties > 500 && empties < 850, "{empties}");
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("pnice".parse::<SamplingVariant>().unwrap(), SamplingVariant::PartitionNice);
        assert_eq!("partition_independent".parse::<SamplingVariant>().unwrap(), SamplingVariant::PartitionIndependent);
        assert!("uniform".parse::<SamplingVariant>().is_err());
        for v in SamplingVariant::ALL {
            assert_eq!(v.as_str().parse::<SamplingVariant>().unwrap(), v);
        }
    }
}

//! Sample data model and the calibration/test split protocol.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

const MASS_TOLERANCE: f64 = 1e-6;

/// Which entry of a [`PositionDist`] the realized token is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrueToken {
    Index(usize),
    /// The realized token is one of the vocabulary entries folded into the tail.
    Tail,
}

/// Next-token distribution at one position, possibly truncated to the head
/// of the vocabulary with the rest folded into `tail_mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionDist {
    pub probs: Vec<f64>,
    pub tail_mass: f64,
    pub true_token: TrueToken,
}

impl PositionDist {
    pub fn new(probs: Vec<f64>, tail_mass: f64, true_token: TrueToken) -> Result<Self> {
        let dist = Self { probs, tail_mass, true_token };
        dist.validate(0)?;
        Ok(dist)
    }

    /// Probability of the realized token.
    pub fn true_prob(&self) -> f64 {
        match self.true_token {
            TrueToken::Index(i) => self.probs[i],
            TrueToken::Tail => self.tail_mass,
        }
    }

    /// Head probabilities followed by the tail as one aggregate entry (when non-zero).
    pub(crate) fn masses(&self) -> impl Iterator<Item = f64> + '_ {
        let tail = (self.tail_mass > 0.0).then_some(self.tail_mass);
        self.probs.iter().copied().chain(tail)
    }

    fn validate(&self, position: usize) -> Result<()> {
        let in_unit = |p: f64| p.is_finite() && (0.0..=1.0).contains(&p);
        if !self.probs.iter().all(|&p| in_unit(p)) {
            return Err(Error::InvalidDistribution { position, reason: "probs must lie in [0, 1]" });
        }
        if !in_unit(self.tail_mass) {
            return Err(Error::InvalidDistribution { position, reason: "tail_mass must lie in [0, 1]" });
        }
        let mass = self.probs.iter().sum::<f64>() + self.tail_mass;
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::ProbabilityMass { position, mass });
        }
        if let TrueToken::Index(i) = self.true_token {
            if i >= self.probs.len() {
                return Err(Error::InvalidDistribution { position, reason: "true_index out of range" });
            }
        }
        Ok(())
    }
}

/// Token-level model outputs for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenRecord {
    pub id: String,
    pub token_logprobs: Vec<f64>,
    pub text: Option<String>,
    pub positions: Option<Vec<PositionDist>>,
}

impl TokenRecord {
    pub fn new(
        id: impl Into<String>,
        token_logprobs: Vec<f64>,
        text: Option<String>,
        positions: Option<Vec<PositionDist>>,
    ) -> Result<Self> {
        let rec = Self { id: id.into(), token_logprobs, text, positions };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.token_logprobs.is_empty() {
            return Err(Error::EmptySequence);
        }
        for (position, &value) in self.token_logprobs.iter().enumerate() {
            if !value.is_finite() || value > 0.0 {
                return Err(Error::InvalidLogProb { position, value });
            }
        }
        if let Some(positions) = &self.positions {
            if positions.len() != self.token_logprobs.len() {
                return Err(Error::LengthMismatch {
                    logprobs: self.token_logprobs.len(),
                    positions: positions.len(),
                });
            }
            for (i, dist) in positions.iter().enumerate() {
                dist.validate(i)?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.token_logprobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_logprobs.is_empty()
    }
}

/// One sample's detection score (lower = more member-like) and optional label.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSample {
    pub id: String,
    pub score: f64,
    pub member: Option<bool>,
}

impl ScoredSample {
    pub fn new(id: impl Into<String>, score: f64, member: Option<bool>) -> Self {
        Self { id: id.into(), score, member }
    }
}

/// An ordered set of scored samples with unique ids and finite scores.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SamplePool {
    samples: Vec<ScoredSample>,
    fully_labeled: bool,
}

impl SamplePool {
    pub fn new(samples: Vec<ScoredSample>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for s in &samples {
            if !s.score.is_finite() {
                return Err(Error::NonFiniteScore("sample score").in_record(&s.id));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        Ok(Self::from_checked(samples))
    }

    /// Builds a pool from samples already known to satisfy the pool invariants
    /// (for example a subset of an existing pool).
    fn from_checked(samples: Vec<ScoredSample>) -> Self {
        let fully_labeled = samples.iter().all(|s| s.member.is_some());
        Self { samples, fully_labeled }
    }

    pub fn samples(&self) -> &[ScoredSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<ScoredSample> {
        self.samples
    }

    pub fn fully_labeled(&self) -> bool {
        self.fully_labeled
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.score).collect()
    }

    /// Member labels in pool order; fails on the first unlabeled sample.
    pub fn labels(&self) -> Result<Vec<bool>> {
        self.samples
            .iter()
            .map(|s| s.member.ok_or_else(|| Error::MissingLabel(s.id.clone())))
            .collect()
    }

    fn subset(&self, indices: &[usize]) -> Self {
        Self::from_checked(indices.iter().map(|&i| self.samples[i].clone()).collect())
    }
}

/// Parameters of one random calibration/test split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub seed: u64,
    /// Target member proportion of the test half.
    pub pi_test: Option<f64>,
    /// Target calibration-to-test size ratio; `None` keeps every calibration sample.
    pub rho: Option<f64>,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        Self { seed, pi_test: None, rho: None }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(pi) = self.pi_test {
            if !(pi > 0.0 && pi < 1.0) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "pi_test = {pi} must lie strictly inside (0, 1)"
                )));
            }
        }
        if let Some(rho) = self.rho {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(Error::InvalidParameter(alloc::format!("rho = {rho} must be positive")));
            }
        }
        Ok(())
    }
}

/// Everything a split produces, with the bookkeeping needed to audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolSplit {
    /// Non-members of the calibration half (after any `rho` subsampling).
    pub cal: SamplePool,
    /// Members of the calibration half. Unused by the subtraction path, used
    /// as the known-member set by the adjusted moment estimator.
    pub cal_members: SamplePool,
    /// The test half (after any `pi_test` subsampling).
    pub test: SamplePool,
    /// Indices into the original pool of the calibration half.
    pub cal_half: Vec<usize>,
    /// Indices into the original pool of the test half before subsampling.
    pub test_half: Vec<usize>,
}

/// Splits a fully labeled pool into a non-member calibration set and a test set.
pub fn split_pool(pool: &SamplePool, spec: &SplitSpec) -> Result<(SamplePool, SamplePool)> {
    split_pool_detailed(pool, spec).map(|s| (s.cal, s.test))
}

/// Random halving of a labeled pool: the larger half supplies the calibration
/// non-members, the other half is the test set, optionally resampled to hold
/// a `pi_test` fraction of members while keeping its size equal to the number
/// of non-members it contained.
pub fn split_pool_detailed(pool: &SamplePool, spec: &SplitSpec) -> Result<PoolSplit> {
    spec.validate()?;
    let labels = pool.labels()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);

    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(&mut rng);
    let cal_size = pool.len().div_ceil(2);
    let mut cal_half = order[..cal_size].to_vec();
    let mut test_half = order[cal_size..].to_vec();
    cal_half.sort_unstable();
    test_half.sort_unstable();

    let (cal_members, mut cal_idx): (Vec<usize>, Vec<usize>) =
        cal_half.iter().partition(|&&i| labels[i]);
    if cal_idx.is_empty() {
        return Err(Error::EmptyCalibration);
    }

    let mut test_idx = test_half.clone();
    if let Some(pi) = spec.pi_test {
        let (members, non_members): (Vec<usize>, Vec<usize>) =
            test_half.iter().partition(|&&i| labels[i]);
        let size = non_members.len();
        let want_members = libm::round(pi * size as f64) as usize;
        let want_non = size - want_members;
        if size == 0 || want_members > members.len() {
            return Err(Error::PiTestUnattainable {
                pi_test: pi,
                needed: want_members.max(1),
                available: members.len(),
            });
        }
        test_idx = pick(&mut rng, &members, want_members);
        test_idx.extend(pick(&mut rng, &non_members, want_non));
        test_idx.sort_unstable();
    }

    if let Some(rho) = spec.rho {
        let target = (libm::round(rho * test_idx.len() as f64) as usize).max(1);
        if target < cal_idx.len() {
            cal_idx = pick(&mut rng, &cal_idx, target);
            cal_idx.sort_unstable();
        }
    }

    Ok(PoolSplit {
        cal: pool.subset(&cal_idx),
        cal_members: pool.subset(&cal_members),
        test: pool.subset(&test_idx),
        cal_half,
        test_half,
    })
}

fn pick(rng: &mut ChaCha12Rng, from: &[usize], amount: usize) -> Vec<usize> {
    index::sample(rng, from.len(), amount).into_iter().map(|i| from[i]).collect()
}

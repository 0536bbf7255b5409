//! Conformal p-values against a non-member calibration set.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sample::SamplePool;

/// One p-value per test sample, in test-pool order.
///
/// Unscaled conformal p-values lie in `[1/(n_cal+1), 1]`. After
/// [`scale_pvalues`] they may leave that range (a negative proportion
/// estimate pushes them above 1).
#[derive(Debug, Clone, PartialEq)]
pub struct PValueVector {
    pub values: Vec<f64>,
    pub n_cal: usize,
}

impl PValueVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn conformal_pvalues(cal: &SamplePool, test: &SamplePool) -> Result<PValueVector> {
    conformal_pvalues_from_scores(&cal.scores(), &test.scores())
}

/// `p_j = (1 + #{i : cal_i <= test_j}) / (n + 1)`.
///
/// Ties count toward the p-value. Calibration scores are sorted once and each
/// test score is located by binary search.
pub fn conformal_pvalues_from_scores(cal: &[f64], test: &[f64]) -> Result<PValueVector> {
    if cal.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    if cal.iter().chain(test).any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore("conformal input"));
    }
    let mut sorted = cal.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let denom = (sorted.len() + 1) as f64;
    let values = test
        .iter()
        .map(|&t| (1 + sorted.partition_point(|&c| c <= t)) as f64 / denom)
        .collect();
    Ok(PValueVector { values, n_cal: cal.len() })
}

/// Multiplies every p-value by `1 - pi_hat`. Values are not clipped at 1.
pub fn scale_pvalues(p: &PValueVector, pi_hat: f64) -> Result<PValueVector> {
    if !(pi_hat < 1.0) || !pi_hat.is_finite() {
        return Err(Error::ProportionOutOfRange(pi_hat));
    }
    let factor = 1.0 - pi_hat;
    Ok(PValueVector { values: p.values.iter().map(|v| factor * v).collect(), n_cal: p.n_cal })
}

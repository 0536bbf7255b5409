//! Estimators of the member proportion of the test pool.
//!
//! Two estimators are provided. The subtraction estimator only needs the
//! non-member calibration set and is conservative (it tends to underestimate
//! the member proportion). The adjusted moment estimator additionally needs a
//! set of known members and corrects the reciprocal of the raw mixture-mean
//! estimate for its second-order bias.

use core::fmt;
use core::str::FromStr;

use alloc::format;

use crate::error::{Error, Result};
use crate::sample::SamplePool;
use crate::stats::{mean, sample_variance};

pub const DEFAULT_ETA: f64 = 0.05;
pub const DEFAULT_MEAN_GAP_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    /// No estimate; p-values are used unscaled.
    None,
    Subtraction,
    AdjustedMoment,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::None => "none",
            EstimatorKind::Subtraction => "subtraction",
            EstimatorKind::AdjustedMoment => "moment",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "vanilla" => Ok(EstimatorKind::None),
            "subtraction" => Ok(EstimatorKind::Subtraction),
            "moment" | "adjusted_moment" => Ok(EstimatorKind::AdjustedMoment),
            _ => Err(Error::InvalidParameter(format!("unknown estimator {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    /// Calibration tail fraction defining the region (subtraction only).
    pub eta: f64,
    /// Relative tolerance on `|mu1 - mu0|` (moment only).
    pub mean_gap_tolerance: f64,
}

impl EstimatorSpec {
    pub fn none() -> Self {
        Self::with_kind(EstimatorKind::None)
    }

    pub fn subtraction(eta: f64) -> Self {
        Self { eta, ..Self::with_kind(EstimatorKind::Subtraction) }
    }

    pub fn adjusted_moment() -> Self {
        Self::with_kind(EstimatorKind::AdjustedMoment)
    }

    pub fn with_kind(kind: EstimatorKind) -> Self {
        Self { kind, eta: DEFAULT_ETA, mean_gap_tolerance: DEFAULT_MEAN_GAP_TOLERANCE }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidParameter(format!("eta = {} must lie in (0, 1)", self.eta)));
        }
        if !(self.mean_gap_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mean gap tolerance = {} must be positive",
                self.mean_gap_tolerance
            )));
        }
        Ok(())
    }
}

/// Intermediate quantities of an estimate, kept for audit reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diagnostics {
    None,
    Subtraction {
        eta: f64,
        /// Region lower edge; the region is `(tau, +inf)`.
        tau: f64,
        /// Calibration scores strictly above `tau`.
        cal_in_region: usize,
        realized_fraction: f64,
        test_in_region: usize,
    },
    Moment {
        mu0: f64,
        mu1: f64,
        mu_test: f64,
        pi0_raw: f64,
        variance: f64,
        theta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProportionEstimate {
    /// Estimated member proportion; below 1, possibly negative.
    pub pi_hat: f64,
    /// `1 - pi_hat`, the p-value multiplier.
    pub scale_factor: f64,
    pub diagnostics: Diagnostics,
    /// The estimator degenerated and `pi_hat = 0` was substituted.
    pub fallback_used: bool,
}

impl ProportionEstimate {
    fn new(pi_hat: f64, diagnostics: Diagnostics, fallback_used: bool) -> Self {
        Self { pi_hat, scale_factor: 1.0 - pi_hat, diagnostics, fallback_used }
    }

    pub fn vanilla() -> Self {
        Self::new(0.0, Diagnostics::None, false)
    }
}

/// Subtraction estimate from a calibration tail region `(tau, +inf)`.
///
/// `tau` is the `(n - c)`-th calibration order statistic with
/// `c = floor(eta * n)`, so `c` calibration scores sit strictly above it
/// (fewer if there are ties at `tau`; the realized count is what is used).
pub fn subtraction_estimate(cal: &[f64], test: &[f64], eta: f64) -> Result<ProportionEstimate> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("eta = {eta} must lie in (0, 1)")));
    }
    if cal.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    if test.is_empty() {
        return Err(Error::PoolTooSmall { name: "test set", needed: 1, got: 0 });
    }
    let n = cal.len();
    let c = libm::floor(eta * n as f64) as usize;
    if c == 0 {
        return Err(Error::RegionEmpty { eta, n });
    }
    let mut sorted = cal.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let tau = sorted[n - c - 1];
    let cal_in_region = n - sorted.partition_point(|&x| x <= tau);
    if cal_in_region == 0 {
        return Err(Error::RegionEmpty { eta, n });
    }
    let realized_fraction = cal_in_region as f64 / n as f64;
    let test_in_region = test.iter().filter(|&&t| t > tau).count();
    let m = test.len();
    let test_fraction = (1 + test_in_region) as f64 / (m + 1) as f64;
    let pi_hat = 1.0 - test_fraction / realized_fraction;
    Ok(ProportionEstimate::new(
        pi_hat,
        Diagnostics::Subtraction { eta, tau, cal_in_region, realized_fraction, test_in_region },
        false,
    ))
}

/// Raw moment estimate of the non-member proportion,
/// `(mu1 - mu_test) / (mu1 - mu0)`.
pub fn raw_moment(mu0: f64, mu1: f64, mu_test: f64, gap_tol: f64) -> Result<f64> {
    let gap = mu1 - mu0;
    let scale = 1f64.max(mu0.abs()).max(mu1.abs());
    if !(gap.abs() > gap_tol * scale) {
        return Err(Error::MeansTooClose { gap: gap.abs() });
    }
    Ok((mu1 - mu_test) / gap)
}

/// Delta-method variance of the raw moment estimate.
#[allow(clippy::too_many_arguments)]
pub fn delta_variance(
    pi0_raw: f64,
    mu0: f64,
    mu1: f64,
    s0sq: f64,
    s1sq: f64,
    stestsq: f64,
    n0: usize,
    n1: usize,
    m: usize,
) -> f64 {
    let gap = mu1 - mu0;
    let bracket = pi0_raw * pi0_raw * s0sq / n0 as f64
        + (1.0 - pi0_raw) * (1.0 - pi0_raw) * s1sq / n1 as f64
        + stestsq / m as f64;
    bracket / (gap * gap)
}

/// Adjusted moment estimate from known non-members, known members and the test pool.
///
/// Falls back to `pi_hat = 0` when the raw non-member estimate is not
/// positive or the corrected reciprocal does not exceed 1.
pub fn adjusted_moment_estimate(
    cal_nonmembers: &[f64],
    cal_members: &[f64],
    test: &[f64],
    gap_tol: f64,
) -> Result<ProportionEstimate> {
    for (name, xs) in [
        ("non-member calibration set", cal_nonmembers),
        ("member calibration set", cal_members),
        ("test set", test),
    ] {
        if xs.len() < 2 {
            return Err(Error::PoolTooSmall { name, needed: 2, got: xs.len() });
        }
    }
    let (mu0, mu1, mu_test) = (mean(cal_nonmembers), mean(cal_members), mean(test));
    let pi0_raw = raw_moment(mu0, mu1, mu_test, gap_tol)?;
    let fallback = |variance: f64, theta: f64| {
        ProportionEstimate::new(
            0.0,
            Diagnostics::Moment { mu0, mu1, mu_test, pi0_raw, variance, theta },
            true,
        )
    };
    if !(pi0_raw > 0.0) {
        return Ok(fallback(f64::NAN, f64::NAN));
    }
    let variance = delta_variance(
        pi0_raw,
        mu0,
        mu1,
        sample_variance(cal_nonmembers),
        sample_variance(cal_members),
        sample_variance(test),
        cal_nonmembers.len(),
        cal_members.len(),
        test.len(),
    );
    let theta = 1.0 / pi0_raw - variance / (pi0_raw * pi0_raw * pi0_raw);
    if !(theta > 1.0) || !theta.is_finite() {
        return Ok(fallback(variance, theta));
    }
    Ok(ProportionEstimate::new(
        1.0 - 1.0 / theta,
        Diagnostics::Moment { mu0, mu1, mu_test, pi0_raw, variance, theta },
        false,
    ))
}

/// Dispatches on `spec.kind`. `cal_members` is needed by the moment estimator only.
pub fn estimate_proportion(
    cal: &[f64],
    test: &[f64],
    spec: &EstimatorSpec,
    cal_members: Option<&[f64]>,
) -> Result<ProportionEstimate> {
    spec.validate()?;
    match spec.kind {
        EstimatorKind::None => Ok(ProportionEstimate::vanilla()),
        EstimatorKind::Subtraction => subtraction_estimate(cal, test, spec.eta),
        EstimatorKind::AdjustedMoment => {
            let members = cal_members.ok_or(Error::MissingCalMembers)?;
            adjusted_moment_estimate(cal, members, test, spec.mean_gap_tolerance)
        }
    }
}

/// Pool-level convenience over [`estimate_proportion`].
pub fn estimate_for_pools(
    cal: &SamplePool,
    test: &SamplePool,
    spec: &EstimatorSpec,
    cal_members: Option<&SamplePool>,
) -> Result<ProportionEstimate> {
    let members = cal_members.map(SamplePool::scores);
    estimate_proportion(&cal.scores(), &test.scores(), spec, members.as_deref())
}

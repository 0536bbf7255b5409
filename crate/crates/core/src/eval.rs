//! Monte Carlo evaluation: realized FDP and power, repeated trials over random
//! splits or fresh synthetic draws, parameter sweeps, and estimator bias/MSE.
//!
//! Trial `t` of a run keyed by seed `s` always sees the data produced by
//! `derive_seed(s, t)`, so any execution order reproduces the sequential run.
//! Aggregation sums in trial-index order.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::proportion::{estimate_proportion, EstimatorKind, EstimatorSpec};
use crate::sample::{split_pool_detailed, SamplePool, ScoredSample, SplitSpec};
use crate::seed::derive_seed;
use crate::selection::{identify_scores, SelectionResult};
use crate::stats::{mean, sample_sd};

/// Default number of Monte Carlo trials per configuration.
pub const DEFAULT_TRIALS: usize = 1000;

/// Fraction of selected samples that are non-members; 0 for an empty selection.
pub fn fdp(result: &SelectionResult, labels: &[bool]) -> Result<f64> {
    fdp_of(&result.selected, labels)
}

/// Fraction of the test pool's members that were selected; 0 if there are none.
pub fn realized_power(result: &SelectionResult, labels: &[bool]) -> Result<f64> {
    let m = result.p_values.len();
    if labels.len() != m {
        return Err(Error::IncompleteLabels { expected: m, got: labels.len() });
    }
    power_of(&result.selected, labels)
}

fn fdp_of(selected: &[usize], labels: &[bool]) -> Result<f64> {
    let mut false_hits = 0usize;
    for &j in selected {
        match labels.get(j) {
            Some(false) => false_hits += 1,
            Some(true) => {}
            None => return Err(Error::UnlabeledSelection(j)),
        }
    }
    Ok(false_hits as f64 / selected.len().max(1) as f64)
}

fn power_of(selected: &[usize], labels: &[bool]) -> Result<f64> {
    let members = labels.iter().filter(|&&m| m).count();
    let mut hits = 0usize;
    for &j in selected {
        if *labels.get(j).ok_or(Error::UnlabeledSelection(j))? {
            hits += 1;
        }
    }
    Ok(hits as f64 / members.max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialReport {
    pub fdp: f64,
    pub power: f64,
    pub selected_count: usize,
    pub pi_hat: f64,
    pub seed: u64,
}

/// Axis values a summary was produced under. `None` means "not set".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellConfig {
    pub pi_test: Option<f64>,
    pub rho: Option<f64>,
    pub eta: Option<f64>,
    pub estimator: EstimatorKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    pub alpha: f64,
    /// Mean FDP over trials.
    pub fdr: f64,
    pub fdr_sd: f64,
    pub power_mean: f64,
    pub power_sd: f64,
    pub mean_selected: f64,
    pub pi_hat_mean: f64,
    pub trials: usize,
    pub config: CellConfig,
}

impl EvalSummary {
    /// Monte Carlo standard error of `fdr`.
    pub fn fdr_se(&self) -> f64 {
        self.fdr_sd / libm::sqrt(self.trials as f64)
    }

    pub fn power_se(&self) -> f64 {
        self.power_sd / libm::sqrt(self.trials as f64)
    }
}

/// Aggregates per-trial reports (in the order given).
pub fn summarize(alpha: f64, config: CellConfig, reports: &[TrialReport]) -> EvalSummary {
    let fdps: Vec<f64> = reports.iter().map(|r| r.fdp).collect();
    let powers: Vec<f64> = reports.iter().map(|r| r.power).collect();
    let counts: Vec<f64> = reports.iter().map(|r| r.selected_count as f64).collect();
    let pis: Vec<f64> = reports.iter().map(|r| r.pi_hat).collect();
    EvalSummary {
        alpha,
        fdr: mean(&fdps),
        fdr_sd: sample_sd(&fdps),
        power_mean: mean(&powers),
        power_sd: sample_sd(&powers),
        mean_selected: mean(&counts),
        pi_hat_mean: mean(&pis),
        trials: reports.len(),
        config,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreGenerator {
    #[default]
    Gaussian,
    /// `exp` of the Gaussian draw; heavy right tail, same ordering.
    LogNormal,
}

/// Two-component synthetic score model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub member_mean: f64,
    pub member_sd: f64,
    pub nonmember_mean: f64,
    pub nonmember_sd: f64,
    /// Calibration (non-member) size.
    pub n: usize,
    /// Test size.
    pub m: usize,
    pub pi_test: f64,
    /// Known-member calibration size, used by the moment estimator.
    pub n_cal_members: usize,
    pub generator: ScoreGenerator,
    pub seed: u64,
}

impl SynthSpec {
    /// Members `N(-1, 1)`, non-members `N(0, 1)`, `n = m = 500`.
    pub fn standard(pi_test: f64, seed: u64) -> Self {
        Self {
            member_mean: -1.0,
            member_sd: 1.0,
            nonmember_mean: 0.0,
            nonmember_sd: 1.0,
            n: 500,
            m: 500,
            pi_test,
            n_cal_members: 0,
            generator: ScoreGenerator::Gaussian,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidParameter(msg));
        for sd in [self.member_sd, self.nonmember_sd] {
            if !(sd >= 0.0 && sd.is_finite()) {
                return bad(format!("standard deviation {sd} must be finite and >= 0"));
            }
        }
        if !(self.member_mean < self.nonmember_mean) {
            return bad(format!(
                "member mean {} must be below non-member mean {} (lower score = member)",
                self.member_mean, self.nonmember_mean
            ));
        }
        if !(self.pi_test > 0.0 && self.pi_test < 1.0) {
            return bad(format!("pi_test = {} must lie strictly inside (0, 1)", self.pi_test));
        }
        if self.n == 0 || self.m == 0 {
            return bad(format!("n = {} and m = {} must be positive", self.n, self.m));
        }
        Ok(())
    }

    /// Number of members in the test population.
    pub fn test_members(&self) -> usize {
        libm::round(self.m as f64 * self.pi_test) as usize
    }
}

struct ScoreSampler {
    member: Normal<f64>,
    nonmember: Normal<f64>,
    generator: ScoreGenerator,
}

impl ScoreSampler {
    fn new(spec: &SynthSpec) -> Result<Self> {
        let normal = |mu, sd| {
            Normal::new(mu, sd).map_err(|e| Error::InvalidParameter(format!("{e}")))
        };
        Ok(Self {
            member: normal(spec.member_mean, spec.member_sd)?,
            nonmember: normal(spec.nonmember_mean, spec.nonmember_sd)?,
            generator: spec.generator,
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R, member: bool) -> f64 {
        let z = if member { self.member.sample(rng) } else { self.nonmember.sample(rng) };
        match self.generator {
            ScoreGenerator::Gaussian => z,
            ScoreGenerator::LogNormal => libm::exp(z),
        }
    }

    fn draw_n<R: Rng>(&self, rng: &mut R, member: bool, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.draw(rng, member)).collect()
    }
}

/// Scores for one trial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialData {
    pub cal: Vec<f64>,
    pub test: Vec<f64>,
    pub test_labels: Vec<bool>,
    pub cal_members: Vec<f64>,
}

/// Fresh synthetic calibration, test and known-member scores.
///
/// Draw order is fixed: calibration non-members, test members, test
/// non-members, calibration members.
pub fn synth_trial_data(spec: &SynthSpec) -> Result<TrialData> {
    spec.validate()?;
    let sampler = ScoreSampler::new(spec)?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let k = spec.test_members();
    let cal = sampler.draw_n(&mut rng, false, spec.n);
    let mut test = sampler.draw_n(&mut rng, true, k);
    test.extend(sampler.draw_n(&mut rng, false, spec.m - k));
    let mut test_labels = alloc::vec![true; k];
    test_labels.resize(spec.m, false);
    let cal_members = sampler.draw_n(&mut rng, true, spec.n_cal_members);
    Ok(TrialData { cal, test, test_labels, cal_members })
}

/// A fully labeled pool: `n` non-members (`cal-*`), a test population of `m`
/// with `round(m * pi_test)` members (`test-*`), and `n_cal_members`
/// further members (`mem-*`).
pub fn synth_pool(spec: &SynthSpec) -> Result<SamplePool> {
    let data = synth_trial_data(spec)?;
    let cal = data.cal.iter().enumerate().map(|(i, &s)| ScoredSample::new(format!("cal-{i}"), s, Some(false)));
    let test = data
        .test
        .iter()
        .zip(&data.test_labels)
        .enumerate()
        .map(|(i, (&s, &l))| ScoredSample::new(format!("test-{i}"), s, Some(l)));
    let members =
        data.cal_members.iter().enumerate().map(|(i, &s)| ScoredSample::new(format!("mem-{i}"), s, Some(true)));
    SamplePool::new(cal.chain(test).chain(members).collect())
}

/// Where each trial's data comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrialSource<'a> {
    /// Random half splits of a fixed labeled pool.
    Split { pool: &'a SamplePool, split: SplitSpec },
    /// Independent synthetic draws per trial.
    Synthetic(SynthSpec),
}

impl<'a> TrialSource<'a> {
    pub fn master_seed(&self) -> u64 {
        match self {
            TrialSource::Split { split, .. } => split.seed,
            TrialSource::Synthetic(spec) => spec.seed,
        }
    }

    pub fn with_pi_test(self, pi: f64) -> Self {
        match self {
            TrialSource::Split { pool, split } => {
                TrialSource::Split { pool, split: SplitSpec { pi_test: Some(pi), ..split } }
            }
            TrialSource::Synthetic(spec) => TrialSource::Synthetic(SynthSpec { pi_test: pi, ..spec }),
        }
    }

    /// Calibration-to-test ratio. For synthetic sources this sets `n = round(rho * m)`.
    pub fn with_rho(self, rho: f64) -> Self {
        match self {
            TrialSource::Split { pool, split } => {
                TrialSource::Split { pool, split: SplitSpec { rho: Some(rho), ..split } }
            }
            TrialSource::Synthetic(spec) => {
                let n = (libm::round(rho * spec.m as f64) as usize).max(1);
                TrialSource::Synthetic(SynthSpec { n, ..spec })
            }
        }
    }

    pub fn config(&self, spec: &EstimatorSpec) -> CellConfig {
        let (pi_test, rho) = match self {
            TrialSource::Split { split, .. } => (split.pi_test, split.rho),
            TrialSource::Synthetic(s) => (Some(s.pi_test), Some(s.n as f64 / s.m as f64)),
        };
        let eta = (spec.kind == EstimatorKind::Subtraction).then_some(spec.eta);
        CellConfig { pi_test, rho, eta, estimator: spec.kind }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TrialSource::Split { pool, split } => {
                split.validate()?;
                pool.labels().map(|_| ())
            }
            TrialSource::Synthetic(spec) => spec.validate(),
        }
    }

    /// Data for trial `index`, and the seed it was derived from.
    pub fn draw(&self, index: u64) -> Result<(TrialData, u64)> {
        let seed = derive_seed(self.master_seed(), index);
        let data = match self {
            TrialSource::Split { pool, split } => {
                let s = split_pool_detailed(pool, &SplitSpec { seed, ..*split })?;
                TrialData {
                    cal: s.cal.scores(),
                    test: s.test.scores(),
                    test_labels: s.test.labels()?,
                    cal_members: s.cal_members.scores(),
                }
            }
            TrialSource::Synthetic(spec) => synth_trial_data(&SynthSpec { seed, ..*spec })?,
        };
        Ok((data, seed))
    }
}

fn members_for<'d>(spec: &EstimatorSpec, data: &'d TrialData) -> Option<&'d [f64]> {
    (spec.kind == EstimatorKind::AdjustedMoment).then_some(data.cal_members.as_slice())
}

/// One trial: draw, identify, score the selection against the labels.
pub fn run_trial(
    source: &TrialSource<'_>,
    alpha: f64,
    spec: &EstimatorSpec,
    index: u64,
) -> Result<TrialReport> {
    let attempt = || {
        let (data, seed) = source.draw(index)?;
        let result = identify_scores(&data.cal, &data.test, alpha, spec, members_for(spec, &data))?;
        Ok(TrialReport {
            fdp: fdp(&result, &data.test_labels)?,
            power: realized_power(&result, &data.test_labels)?,
            selected_count: result.selected.len(),
            pi_hat: result.estimate.pi_hat,
            seed,
        })
    };
    attempt().map_err(|e: Error| e.in_trial(index))
}

pub fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        Err(Error::InvalidParameter("trials must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// Runs `trials` trials sequentially and summarizes them.
pub fn run_trials(
    source: &TrialSource<'_>,
    alpha: f64,
    spec: &EstimatorSpec,
    trials: usize,
) -> Result<EvalSummary> {
    check_trials(trials)?;
    source.validate()?;
    let reports = (0..trials as u64)
        .map(|t| run_trial(source, alpha, spec, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(alpha, source.config(spec), &reports))
}

/// Axes of a sweep; absent axes are left at the source's setting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepAxes {
    pub alphas: Vec<f64>,
    pub pi_tests: Option<Vec<f64>>,
    pub rhos: Option<Vec<f64>>,
    pub etas: Option<Vec<f64>>,
}

/// One configuration of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell<'a> {
    pub source: TrialSource<'a>,
    pub alpha: f64,
    pub spec: EstimatorSpec,
}

impl SweepCell<'_> {
    pub fn config(&self) -> CellConfig {
        self.source.config(&self.spec)
    }
}

/// Cartesian product of the axes, ordered pi_test, rho, eta, alpha (alpha fastest).
pub fn plan_sweep<'a>(
    source: &TrialSource<'a>,
    axes: &SweepAxes,
    spec: &EstimatorSpec,
) -> Result<Vec<SweepCell<'a>>> {
    if axes.alphas.is_empty() {
        return Err(Error::InvalidParameter("at least one alpha is required".into()));
    }
    if axes.etas.is_some() && spec.kind != EstimatorKind::Subtraction {
        return Err(Error::EtaAxisRequiresSubtraction);
    }
    let axis = |v: &Option<Vec<f64>>| -> Vec<Option<f64>> {
        match v {
            Some(values) => values.iter().copied().map(Some).collect(),
            None => alloc::vec![None],
        }
    };
    let mut cells = Vec::new();
    for pi in axis(&axes.pi_tests) {
        for rho in axis(&axes.rhos) {
            for eta in axis(&axes.etas) {
                let mut cell_source = *source;
                if let Some(pi) = pi {
                    cell_source = cell_source.with_pi_test(pi);
                }
                if let Some(rho) = rho {
                    cell_source = cell_source.with_rho(rho);
                }
                let cell_spec = EstimatorSpec { eta: eta.unwrap_or(spec.eta), ..*spec };
                cell_spec.validate()?;
                cell_source.validate()?;
                for &alpha in &axes.alphas {
                    if !(alpha > 0.0 && alpha < 1.0) {
                        return Err(Error::InvalidAlpha(alpha));
                    }
                    cells.push(SweepCell { source: cell_source, alpha, spec: cell_spec });
                }
            }
        }
    }
    Ok(cells)
}

/// One summary per sweep cell, in [`plan_sweep`] order.
pub fn sweep(
    source: &TrialSource<'_>,
    axes: &SweepAxes,
    spec: &EstimatorSpec,
    trials: usize,
) -> Result<Vec<EvalSummary>> {
    check_trials(trials)?;
    plan_sweep(source, axes, spec)?
        .iter()
        .map(|cell| run_trials(&cell.source, cell.alpha, &cell.spec, trials))
        .collect()
}

/// Bias and mean squared error of a proportion estimator at one `pi_test`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasMse {
    pub pi_test: f64,
    pub bias: f64,
    pub bias_se: f64,
    pub mse: f64,
    pub mse_se: f64,
    pub trials: usize,
}

impl BiasMse {
    pub fn from_estimates(pi_test: f64, estimates: &[f64]) -> Self {
        let errors: Vec<f64> = estimates.iter().map(|e| e - pi_test).collect();
        let squared: Vec<f64> = errors.iter().map(|e| e * e).collect();
        let root_n = libm::sqrt(estimates.len() as f64);
        BiasMse {
            pi_test,
            bias: mean(&errors),
            bias_se: sample_sd(&errors) / root_n,
            mse: mean(&squared),
            mse_se: sample_sd(&squared) / root_n,
            trials: estimates.len(),
        }
    }
}

/// The proportion estimate on trial `index` of `source`.
pub fn estimate_trial(source: &TrialSource<'_>, spec: &EstimatorSpec, index: u64) -> Result<f64> {
    let attempt = || {
        let (data, _) = source.draw(index)?;
        estimate_proportion(&data.cal, &data.test, spec, members_for(spec, &data)).map(|e| e.pi_hat)
    };
    attempt().map_err(|e| e.in_trial(index))
}

pub fn check_bias_spec(spec: &EstimatorSpec) -> Result<()> {
    if spec.kind == EstimatorKind::None {
        return Err(Error::InvalidParameter("bias/MSE needs an estimator other than none".into()));
    }
    spec.validate()
}

/// Estimator bias and MSE at each `pi_test`, over `trials` draws each.
pub fn estimator_bias_mse(
    source: &TrialSource<'_>,
    spec: &EstimatorSpec,
    pi_tests: &[f64],
    trials: usize,
) -> Result<Vec<BiasMse>> {
    check_bias_spec(spec)?;
    check_trials(trials)?;
    pi_tests
        .iter()
        .map(|&pi| {
            let cell = source.with_pi_test(pi);
            cell.validate()?;
            let estimates = (0..trials as u64)
                .map(|t| estimate_trial(&cell, spec, t))
                .collect::<Result<Vec<_>>>()?;
            Ok(BiasMse::from_estimates(pi, &estimates))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::PValueVector;
    use crate::proportion::ProportionEstimate;
    use alloc::vec;

    fn result_with(selected: Vec<usize>, m: usize) -> SelectionResult {
        let p = PValueVector { values: vec![0.5; m], n_cal: 10 };
        SelectionResult {
            selected,
            k_star: 0,
            threshold: 0.0,
            alpha: 0.1,
            estimate: ProportionEstimate::vanilla(),
            p_values: p.clone(),
            p_scaled: p,
        }
    }

    #[test]
    fn fdp_examples() {
        let labels = [true, true, false];
        assert_eq!(fdp(&result_with(vec![1, 2], 3), &labels).unwrap(), 0.5);
        assert_eq!(fdp(&result_with(vec![], 3), &labels).unwrap(), 0.0);
        assert_eq!(fdp(&result_with(vec![0, 1], 3), &labels).unwrap(), 0.0);
        assert_eq!(fdp(&result_with(vec![5], 3), &labels), Err(Error::UnlabeledSelection(5)));
    }

    #[test]
    fn power_examples() {
        let labels = [true, true, true, true, true, false, false];
        assert!((realized_power(&result_with(vec![0, 1, 2], 7), &labels).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(realized_power(&result_with(vec![0, 1], 2), &[false, false]).unwrap(), 0.0);
        assert_eq!(realized_power(&result_with(vec![0, 1, 2, 3, 4], 7), &labels).unwrap(), 1.0);
        assert!(matches!(
            realized_power(&result_with(vec![], 7), &labels[..3]),
            Err(Error::IncompleteLabels { .. })
        ));
    }

    #[test]
    fn synth_pool_construction() {
        let spec = SynthSpec { n: 30, m: 21, pi_test: 0.3, ..SynthSpec::standard(0.3, 4) };
        let pool = synth_pool(&spec).unwrap();
        assert_eq!(pool.len(), 51);
        assert!(pool.fully_labeled());
        let members = pool.samples().iter().filter(|s| s.member == Some(true)).count();
        assert_eq!(members, 6); // round(21 * 0.3) = round(6.3)
        assert_eq!(synth_pool(&spec).unwrap(), pool);
        assert_ne!(synth_pool(&SynthSpec { seed: 5, ..spec }).unwrap(), pool);
    }

    #[test]
    fn zero_sd_gives_point_masses() {
        let spec = SynthSpec { member_sd: 0.0, nonmember_sd: 0.0, n: 10, m: 10, ..SynthSpec::standard(0.5, 1) };
        let data = synth_trial_data(&spec).unwrap();
        assert!(data.cal.iter().all(|&s| s == 0.0));
        for (s, l) in data.test.iter().zip(&data.test_labels) {
            assert_eq!(*s, if *l { -1.0 } else { 0.0 });
        }
    }

    #[test]
    fn synth_spec_validation() {
        assert!(SynthSpec::standard(1.0, 0).validate().is_err());
        assert!(SynthSpec::standard(0.0, 0).validate().is_err());
        let flipped = SynthSpec { member_mean: 1.0, ..SynthSpec::standard(0.5, 0) };
        assert!(flipped.validate().is_err());
        assert!(SynthSpec { member_sd: -1.0, ..SynthSpec::standard(0.5, 0) }.validate().is_err());
    }

    #[test]
    fn lognormal_generator_preserves_order() {
        let g = SynthSpec { member_sd: 0.0, nonmember_sd: 0.0, n: 3, m: 4, ..SynthSpec::standard(0.5, 1) };
        let ln = SynthSpec { generator: ScoreGenerator::LogNormal, ..g };
        let data = synth_trial_data(&ln).unwrap();
        assert!(data.cal.iter().all(|&s| (s - 1.0).abs() < 1e-15));
        assert!((data.test[0] - libm::exp(-1.0)).abs() < 1e-15);
    }

    fn separated_pool() -> SamplePool {
        // members near -100, non-members near 0: p-values of members are minimal
        let spec = SynthSpec {
            member_mean: -100.0,
            member_sd: 0.1,
            nonmember_sd: 0.1,
            n: 200,
            m: 200,
            ..SynthSpec::standard(0.5, 9)
        };
        synth_pool(&spec).unwrap()
    }

    #[test]
    fn separated_pool_has_full_power() {
        let pool = separated_pool();
        let source = TrialSource::Split { pool: &pool, split: SplitSpec::new(3) };
        let s = run_trials(&source, 0.5, &EstimatorSpec::none(), 100).unwrap();
        assert_eq!(s.power_mean, 1.0);
        assert!(s.fdr <= 0.5);
        assert_eq!(s.trials, 100);
    }

    #[test]
    fn single_trial_matches_manual_pipeline() {
        let pool = separated_pool();
        let split = SplitSpec::new(17);
        let source = TrialSource::Split { pool: &pool, split };
        let s = run_trials(&source, 0.2, &EstimatorSpec::subtraction(0.05), 1).unwrap();

        let seed = derive_seed(17, 0);
        let parts = split_pool_detailed(&pool, &SplitSpec { seed, ..split }).unwrap();
        let r = crate::selection::identify_pools(&parts.cal, &parts.test, 0.2, &EstimatorSpec::subtraction(0.05), None)
            .unwrap();
        let labels = parts.test.labels().unwrap();
        assert_eq!(s.fdr, fdp(&r, &labels).unwrap());
        assert_eq!(s.power_mean, realized_power(&r, &labels).unwrap());
        assert_eq!(s.mean_selected, r.selected.len() as f64);
        assert_eq!(s.fdr_sd, 0.0);
    }

    #[test]
    fn pool_without_test_members() {
        let samples = (0..40).map(|i| ScoredSample::new(format!("s{i}"), i as f64, Some(false))).collect();
        let pool = SamplePool::new(samples).unwrap();
        let source = TrialSource::Split { pool: &pool, split: SplitSpec::new(1) };
        let s = run_trials(&source, 0.1, &EstimatorSpec::none(), 20).unwrap();
        assert_eq!(s.power_mean, 0.0);
        assert_eq!(s.fdr, 0.0);
    }

    #[test]
    fn trial_errors_carry_the_index() {
        let samples = (0..20).map(|i| ScoredSample::new(format!("s{i}"), i as f64, Some(false))).collect();
        let pool = SamplePool::new(samples).unwrap();
        let source = TrialSource::Split { pool: &pool, split: SplitSpec::new(1) };
        // 10 calibration samples, eta = 0.05 leaves the region empty
        let err = run_trials(&source, 0.1, &EstimatorSpec::subtraction(0.05), 3).unwrap_err();
        assert!(matches!(err, Error::Trial { index: 0, .. }));
    }

    #[test]
    fn sweep_shapes() {
        let source = TrialSource::Synthetic(SynthSpec { n: 40, m: 40, ..SynthSpec::standard(0.5, 2) });
        let spec = EstimatorSpec::subtraction(0.1);
        let axes = SweepAxes { alphas: vec![0.1, 0.2], ..Default::default() };
        assert_eq!(sweep(&source, &axes, &spec, 5).unwrap().len(), 2);
        let axes = SweepAxes { alphas: vec![0.1, 0.2, 0.3], pi_tests: Some(vec![0.2, 0.6]), ..Default::default() };
        let rows = sweep(&source, &axes, &spec, 5).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].config.pi_test, Some(0.2));
        assert_eq!(rows[1].alpha, 0.2);
        assert_eq!(rows[3].config.pi_test, Some(0.6));

        let axes = SweepAxes { alphas: vec![0.1], etas: Some(vec![0.1]), ..Default::default() };
        let moment = EstimatorSpec::adjusted_moment();
        assert_eq!(sweep(&source, &axes, &moment, 5), Err(Error::EtaAxisRequiresSubtraction));
        assert!(sweep(&source, &SweepAxes::default(), &spec, 5).is_err());
    }

    #[test]
    fn rho_axis_rescales_synthetic_calibration() {
        let source = TrialSource::Synthetic(SynthSpec { n: 40, m: 40, ..SynthSpec::standard(0.5, 2) });
        match source.with_rho(0.5) {
            TrialSource::Synthetic(s) => assert_eq!(s.n, 20),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bias_mse_arithmetic() {
        let exact = BiasMse::from_estimates(0.3, &[0.3; 10]);
        assert_eq!((exact.bias, exact.mse), (0.0, 0.0));
        let offset = BiasMse::from_estimates(0.5, &[0.4; 10]);
        assert!((offset.bias + 0.1).abs() < 1e-12);
        assert!((offset.mse - 0.01).abs() < 1e-12);
    }

    #[test]
    fn bias_mse_rejects_vanilla() {
        let source = TrialSource::Synthetic(SynthSpec::standard(0.5, 0));
        assert!(estimator_bias_mse(&source, &EstimatorSpec::none(), &[0.5], 10).is_err());
    }

    #[test]
    fn moment_path_runs_on_splits() {
        let pool = separated_pool();
        let source = TrialSource::Split { pool: &pool, split: SplitSpec::new(5) };
        let s = run_trials(&source, 0.1, &EstimatorSpec::adjusted_moment(), 10).unwrap();
        assert!(s.pi_hat_mean > 0.0);
    }
}

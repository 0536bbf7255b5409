//! Parallel execution of Monte Carlo trials.
//!
//! Each trial derives its data from `(master seed, trial index)` alone and the
//! reports are aggregated in index order, so the output does not depend on
//! the worker count.

use memsel_core::eval::{check_trials, estimate_trial};
use memsel_core::{
    plan_sweep, run_trial, summarize, BiasMse, EstimatorSpec, EvalSummary, Result, SweepAxes,
    TrialSource,
};
use rayon::prelude::*;
use rayon::ThreadPool;

pub struct Runner {
    pool: ThreadPool,
}

impl Runner {
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Maps `f` over trial indices; the first failing index wins.
    fn map_trials<T, F>(&self, trials: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync,
    {
        let results: Vec<Result<T>> =
            self.pool.install(|| (0..trials as u64).into_par_iter().map(&f).collect());
        results.into_iter().collect()
    }

    pub fn run_trials(
        &self,
        source: &TrialSource<'_>,
        alpha: f64,
        spec: &EstimatorSpec,
        trials: usize,
    ) -> Result<EvalSummary> {
        check_trials(trials)?;
        source.validate()?;
        let reports = self.map_trials(trials, |t| run_trial(source, alpha, spec, t))?;
        Ok(summarize(alpha, source.config(spec), &reports))
    }

    pub fn sweep(
        &self,
        source: &TrialSource<'_>,
        axes: &SweepAxes,
        spec: &EstimatorSpec,
        trials: usize,
    ) -> Result<Vec<EvalSummary>> {
        check_trials(trials)?;
        plan_sweep(source, axes, spec)?
            .iter()
            .map(|cell| self.run_trials(&cell.source, cell.alpha, &cell.spec, trials))
            .collect()
    }

    /// Proportion estimates for trials `0..trials`, in index order.
    pub fn estimates(&self, source: &TrialSource<'_>, spec: &EstimatorSpec, trials: usize) -> Result<Vec<f64>> {
        check_trials(trials)?;
        source.validate()?;
        self.map_trials(trials, |t| estimate_trial(source, spec, t))
    }

    pub fn bias_mse(
        &self,
        source: &TrialSource<'_>,
        spec: &EstimatorSpec,
        pi_tests: &[f64],
        trials: usize,
    ) -> Result<Vec<BiasMse>> {
        memsel_core::eval::check_bias_spec(spec)?;
        pi_tests
            .iter()
            .map(|&pi| {
                let estimates = self.estimates(&source.with_pi_test(pi), spec, trials)?;
                Ok(BiasMse::from_estimates(pi, &estimates))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use memsel_core::{estimator_bias_mse, run_trials, sweep, SynthSpec};

    fn source() -> TrialSource<'static> {
        TrialSource::Synthetic(SynthSpec { n: 80, m: 60, ..SynthSpec::standard(0.4, 21) })
    }

    #[test]
    fn matches_sequential_harness() {
        let spec = EstimatorSpec::subtraction(0.1);
        let seq = run_trials(&source(), 0.2, &spec, 40).unwrap();
        for workers in [1, 3, 8] {
            let par = Runner::new(workers).unwrap().run_trials(&source(), 0.2, &spec, 40).unwrap();
            assert_eq!(par, seq);
        }
        let axes = SweepAxes { alphas: vec![0.1, 0.3], pi_tests: Some(vec![0.2, 0.7]), ..Default::default() };
        assert_eq!(Runner::new(4).unwrap().sweep(&source(), &axes, &spec, 10).unwrap(), sweep(&source(), &axes, &spec, 10).unwrap());
        assert_eq!(
            Runner::new(4).unwrap().bias_mse(&source(), &spec, &[0.3], 25).unwrap(),
            estimator_bias_mse(&source(), &spec, &[0.3], 25).unwrap()
        );
    }

    #[test]
    fn errors_report_the_first_failing_trial() {
        let tiny = TrialSource::Synthetic(SynthSpec { n: 5, m: 5, ..SynthSpec::standard(0.4, 1) });
        let err = Runner::new(4).unwrap().run_trials(&tiny, 0.1, &EstimatorSpec::subtraction(0.05), 16).unwrap_err();
        assert!(matches!(err, memsel_core::Error::Trial { index: 0, .. }));
    }
}

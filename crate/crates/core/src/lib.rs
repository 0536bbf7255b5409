//! Identification of training-set members inside a pool of candidate samples
//! with false discovery rate control.
//!
//! The pipeline takes scalar detection scores (lower means more member-like),
//! turns each test score into a conformal p-value against a calibration set of
//! confirmed non-members, rescales the p-values by an estimate of the member
//! proportion in the test pool, and runs Benjamini–Hochberg on the result.
//!
//! ```
//! use memsel_core::{identify_scores, EstimatorSpec};
//!
//! let cal: Vec<f64> = (0..99).map(|i| 10.0 + i as f64).collect();
//! let test = [0.1, 0.2, 0.3, 0.4, 0.5, 60.0, 70.0, 80.0, 90.0, 100.0];
//! let result = identify_scores(&cal, &test, 0.5, &EstimatorSpec::none(), None).unwrap();
//! assert_eq!(result.selected, vec![0, 1, 2, 3, 4]);
//! ```
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the parallel
//! trial runner and the command line live in the `memsel` crate.
#![no_std]
// Negated comparisons are how NaN parameters get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod conformal;
pub mod error;
pub mod eval;
pub mod proportion;
pub mod sample;
pub mod scores;
pub mod seed;
pub mod selection;
mod stats;

pub use conformal::{conformal_pvalues, conformal_pvalues_from_scores, scale_pvalues, PValueVector};
pub use error::{Error, Result};
pub use eval::{
    estimate_trial, estimator_bias_mse, fdp, plan_sweep, realized_power, run_trial, run_trials, summarize, sweep,
    synth_pool, synth_trial_data, BiasMse, CellConfig, EvalSummary, ScoreGenerator, SweepAxes, SweepCell,
    SynthSpec, TrialData, TrialReport, TrialSource,
};
pub use proportion::{
    adjusted_moment_estimate, delta_variance, estimate_for_pools, estimate_proportion, raw_moment, subtraction_estimate,
    Diagnostics, EstimatorKind, EstimatorSpec, ProportionEstimate,
};
pub use sample::{
    split_pool, split_pool_detailed, PoolSplit, PositionDist, SamplePool, ScoredSample, SplitSpec,
    TokenRecord, TrueToken,
};
pub use scores::{
    m_entropy, max_renyi_k, min_k, perplexity, renyi_entropy, score_pool, zlib_ratio, Scorer,
};
pub use selection::{
    bh_select, identify_scores, identify_pools, threshold_classify, BhSelection, SelectionResult,
};

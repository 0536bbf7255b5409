//! Monte Carlo properties of the trial harness on synthetic scores.

use memsel::runner::Runner;
use memsel_core::{EstimatorKind, EstimatorSpec, EvalSummary, ScoreGenerator, SweepAxes, SynthSpec, TrialSource};

const SEED: u64 = 77;
const ALPHAS: [f64; 6] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5];

fn runner() -> Runner {
    Runner::new(std::thread::available_parallelism().map_or(4, |n| n.get())).unwrap()
}

fn assert_fdr_controlled(rows: &[EvalSummary]) {
    for r in rows {
        assert!(r.fdr <= r.alpha + 3.0 * r.fdr_se(), "{r:?}");
    }
}

#[test]
fn fdr_is_controlled_for_every_eta() {
    let axes = SweepAxes {
        alphas: ALPHAS.to_vec(),
        pi_tests: Some(vec![0.1, 0.5, 0.9]),
        etas: Some(vec![0.01, 0.05, 0.1, 0.5]),
        ..Default::default()
    };
    let source = TrialSource::Synthetic(SynthSpec::standard(0.5, SEED));
    let rows = runner().sweep(&source, &axes, &EstimatorSpec::subtraction(0.05), 1000).unwrap();
    assert_eq!(rows.len(), 72);
    assert_fdr_controlled(&rows);
}

#[test]
fn fdr_is_controlled_under_heavy_tails() {
    let axes = SweepAxes { alphas: ALPHAS.to_vec(), pi_tests: Some(vec![0.1, 0.5, 0.9]), ..Default::default() };
    let spec = SynthSpec { generator: ScoreGenerator::LogNormal, ..SynthSpec::standard(0.5, SEED) };
    for est in [EstimatorSpec::none(), EstimatorSpec::subtraction(0.05)] {
        let rows = runner().sweep(&TrialSource::Synthetic(spec), &axes, &est, 1000).unwrap();
        assert_fdr_controlled(&rows);
    }
}

/// Spread of FDP and power does not grow with the calibration size. Vanilla
/// cells with alpha < 0.2 are excluded: there the p-value floor 1/(n + 1)
/// empties the selection at small n, so spread grows from zero instead.
#[test]
fn larger_calibration_sets_do_not_increase_spread() {
    let rhos = [0.1, 0.5, 1.0];
    let axes = SweepAxes { alphas: ALPHAS.to_vec(), rhos: Some(rhos.to_vec()), ..Default::default() };
    let source = TrialSource::Synthetic(SynthSpec::standard(0.5, SEED));
    for est in [EstimatorSpec::none(), EstimatorSpec::subtraction(0.05)] {
        let rows = runner().sweep(&source, &axes, &est, 1000).unwrap();
        for (i, &alpha) in ALPHAS.iter().enumerate() {
            if est.kind == EstimatorKind::None && alpha < 0.2 {
                continue;
            }
            let cells: Vec<&EvalSummary> = (0..rhos.len()).map(|j| &rows[j * ALPHAS.len() + i]).collect();
            for pair in cells.windows(2) {
                assert!(pair[1].fdr_sd <= 1.1 * pair[0].fdr_sd, "{:?} alpha={alpha}: {pair:?}", est.kind);
                assert!(pair[1].power_sd <= 1.1 * pair[0].power_sd, "{:?} alpha={alpha}: {pair:?}", est.kind);
            }
        }
    }
}

#[test]
fn tiny_calibration_sets_cannot_reach_strict_levels() {
    // n = 50: every p-value is at least 1/51, above any BH cut k * 0.05 / 500 with k < 196.
    let source = TrialSource::Synthetic(SynthSpec::standard(0.5, SEED)).with_rho(0.1);
    let row = runner().run_trials(&source, 0.05, &EstimatorSpec::none(), 200).unwrap();
    assert_eq!(row.mean_selected, 0.0);
    assert_eq!((row.fdr_sd, row.power_sd), (0.0, 0.0));
}

#[test]
fn subtraction_bias_is_not_positive() {
    let source = TrialSource::Synthetic(SynthSpec::standard(0.5, SEED));
    let rows = runner().bias_mse(&source, &EstimatorSpec::subtraction(0.05), &[0.5], 1000).unwrap();
    assert!(rows[0].bias <= 3.0 * rows[0].bias_se, "{:?}", rows[0]);
}

//! Benjamini–Hochberg selection over scaled conformal p-values, the end-to-end
//! identification pipeline, and the plain level-set baseline.

use alloc::vec::Vec;

use crate::conformal::{conformal_pvalues_from_scores, scale_pvalues, PValueVector};
use crate::error::{Error, Result};
use crate::proportion::{estimate_proportion, EstimatorKind, EstimatorSpec, ProportionEstimate};
use crate::sample::SamplePool;

/// Outcome of the step-up rule alone.
#[derive(Debug, Clone, PartialEq)]
pub struct BhSelection {
    /// Selected positions in ascending order.
    pub selected: Vec<usize>,
    /// Largest `k` with `p_(k) <= k * alpha / m`; 0 when none exists.
    pub k_star: usize,
    /// `k_star * alpha / m`, or 0 when nothing is selected.
    pub threshold: f64,
}

/// Full record of one identification run.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub selected: Vec<usize>,
    pub k_star: usize,
    pub threshold: f64,
    pub alpha: f64,
    pub estimate: ProportionEstimate,
    /// Unscaled conformal p-values.
    pub p_values: PValueVector,
    pub p_scaled: PValueVector,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Benjamini–Hochberg at level `alpha` over `m` hypotheses.
///
/// Selection is by value: every p-value at or below `k* alpha / m` is
/// selected, so exact ties at the threshold are all kept.
pub fn bh_select(p_scaled: &PValueVector, alpha: f64, m: usize) -> Result<BhSelection> {
    check_alpha(alpha)?;
    if p_scaled.len() != m || m == 0 {
        return Err(Error::PValueCount { expected: m, got: p_scaled.len() });
    }
    if let Some((index, &value)) =
        p_scaled.values.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidPValue { index, value });
    }
    let mut sorted = p_scaled.values.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let k_star = (1..=m)
        .rev()
        .find(|&k| sorted[k - 1] <= k as f64 * alpha / m as f64)
        .unwrap_or(0);
    if k_star == 0 {
        return Ok(BhSelection { selected: Vec::new(), k_star: 0, threshold: 0.0 });
    }
    let threshold = k_star as f64 * alpha / m as f64;
    let selected = p_scaled
        .values
        .iter()
        .enumerate()
        .filter(|(_, &p)| p <= threshold)
        .map(|(j, _)| j)
        .collect();
    Ok(BhSelection { selected, k_star, threshold })
}

/// Conformal p-values, proportion estimate, scaling and BH on raw scores.
pub fn identify_scores(
    cal: &[f64],
    test: &[f64],
    alpha: f64,
    spec: &EstimatorSpec,
    cal_members: Option<&[f64]>,
) -> Result<SelectionResult> {
    check_alpha(alpha)?;
    spec.validate()?;
    if spec.kind == EstimatorKind::AdjustedMoment && cal_members.is_none() {
        return Err(Error::MissingCalMembers);
    }
    let p_values = conformal_pvalues_from_scores(cal, test)?;
    let estimate = estimate_proportion(cal, test, spec, cal_members)?;
    let p_scaled = scale_pvalues(&p_values, estimate.pi_hat)?;
    let bh = bh_select(&p_scaled, alpha, test.len())?;
    Ok(SelectionResult {
        selected: bh.selected,
        k_star: bh.k_star,
        threshold: bh.threshold,
        alpha,
        estimate,
        p_values,
        p_scaled,
    })
}

/// The full identification pipeline over sample pools.
pub fn identify_pools(
    cal: &SamplePool,
    test: &SamplePool,
    alpha: f64,
    spec: &EstimatorSpec,
    cal_members: Option<&SamplePool>,
) -> Result<SelectionResult> {
    let members = cal_members.map(SamplePool::scores);
    identify_scores(&cal.scores(), &test.scores(), alpha, spec, members.as_deref())
}

/// `score <= tau` per sample. A baseline without any error guarantee.
pub fn threshold_classify(scores: &SamplePool, tau: f64) -> Vec<bool> {
    scores.samples().iter().map(|s| s.score <= tau).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::ScoredSample;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;

    fn pv(values: &[f64]) -> PValueVector {
        PValueVector { values: values.to_vec(), n_cal: 100 }
    }

    /// Brute-force search over every k: the largest k such that at least k
    /// p-values fall at or below k * alpha / m.
    fn brute_force(values: &[f64], alpha: f64) -> (usize, Vec<usize>) {
        let m = values.len();
        let mut best = 0;
        for k in 1..=m {
            let t = k as f64 * alpha / m as f64;
            if values.iter().filter(|&&p| p <= t).count() >= k {
                best = k;
            }
        }
        if best == 0 {
            return (0, vec![]);
        }
        let t = best as f64 * alpha / m as f64;
        (best, (0..m).filter(|&j| values[j] <= t).collect())
    }

    #[test]
    fn ladder_example() {
        let r = bh_select(&pv(&[0.01, 0.04, 0.2]), 0.1, 3).unwrap();
        assert_eq!(r.k_star, 2);
        assert!((r.threshold - 0.2 / 3.0).abs() < 1e-15);
        assert_eq!(r.selected, vec![0, 1]);
    }

    #[test]
    fn nothing_below_alpha() {
        let r = bh_select(&pv(&[0.3, 0.5, 0.9]), 0.2, 3).unwrap();
        assert_eq!(r, BhSelection { selected: vec![], k_star: 0, threshold: 0.0 });
    }

    #[test]
    fn single_hypothesis() {
        assert_eq!(bh_select(&pv(&[0.05]), 0.05, 1).unwrap().selected, vec![0]);
        assert!(bh_select(&pv(&[0.0501]), 0.05, 1).unwrap().selected.is_empty());
    }

    #[test]
    fn bad_inputs() {
        assert_eq!(bh_select(&pv(&[0.1]), 1.0, 1), Err(Error::InvalidAlpha(1.0)));
        assert_eq!(bh_select(&pv(&[0.1]), 0.0, 1), Err(Error::InvalidAlpha(0.0)));
        assert!(matches!(bh_select(&pv(&[0.1]), 0.1, 2), Err(Error::PValueCount { .. })));
        assert!(matches!(bh_select(&pv(&[0.0]), 0.1, 1), Err(Error::InvalidPValue { .. })));
    }

    #[test]
    fn ties_at_threshold_are_all_selected() {
        let r = bh_select(&pv(&[0.1, 0.1, 0.1, 0.9]), 0.4, 4).unwrap();
        assert_eq!(r.k_star, 3);
        assert_eq!(r.selected, vec![0, 1, 2]);
    }

    fn pool(prefix: &str, scores: &[f64]) -> SamplePool {
        SamplePool::new(
            scores.iter().enumerate().map(|(i, &s)| ScoredSample::new(format!("{prefix}{i}"), s, None)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn perfectly_separated_pool() {
        let cal: Vec<f64> = (0..99).map(|i| 10.0 + i as f64).collect();
        // five test members below all calibration scores, five non-members in the upper half
        let test = [0.1, 0.2, 0.3, 0.4, 0.5, 60.0, 70.0, 80.0, 90.0, 100.0];
        let r = identify_pools(&pool("c", &cal), &pool("t", &test), 0.5, &EstimatorSpec::none(), None).unwrap();
        assert_eq!(r.selected, vec![0, 1, 2, 3, 4]);
        assert!(r.p_values.values[..5].iter().all(|&p| p == 0.01));
        assert!(r.p_values.values[5..].iter().all(|&p| p >= 0.5));
    }

    #[test]
    fn vanilla_path_is_plain_bh() {
        let cal = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let test = [0.5, 3.5, 7.0, 0.2];
        let r = identify_scores(&cal, &test, 0.3, &EstimatorSpec::none(), None).unwrap();
        let p = conformal_pvalues_from_scores(&cal, &test).unwrap();
        let bh = bh_select(&p, 0.3, 4).unwrap();
        assert_eq!(r.p_scaled, p);
        assert_eq!(r.selected, bh.selected);
    }

    #[test]
    fn pipeline_errors_surface() {
        let cal: Vec<f64> = (0..10).map(f64::from).collect();
        let err = identify_scores(&cal, &[1.0], 0.1, &EstimatorSpec::subtraction(0.05), None);
        assert!(matches!(err, Err(Error::RegionEmpty { .. })));
        let err = identify_scores(&cal, &[1.0], 0.1, &EstimatorSpec::adjusted_moment(), None);
        assert_eq!(err, Err(Error::MissingCalMembers));
    }

    #[test]
    fn level_set_baseline() {
        let p = pool("s", &[1.0, 2.0, 3.0]);
        assert_eq!(threshold_classify(&p, 2.0), vec![true, true, false]);
        assert_eq!(threshold_classify(&p, 0.0), vec![false, false, false]);
        assert_eq!(threshold_classify(&p, 3.0), vec![true, true, true]);
    }

    fn pvec() -> impl Strategy<Value = Vec<f64>> {
        // coarse grid produces ties
        prop::collection::vec((1u32..=40).prop_map(|k| k as f64 / 40.0), 1..=12)
    }

    proptest! {
        #[test]
        fn matches_brute_force(values in pvec(), alpha in 0.01f64..0.99) {
            let r = bh_select(&pv(&values), alpha, values.len()).unwrap();
            let (k, sel) = brute_force(&values, alpha);
            prop_assert_eq!(r.k_star, k);
            prop_assert_eq!(&r.selected, &sel);
            prop_assert!(r.selected.len() >= r.k_star);
        }

        #[test]
        fn level_monotone(values in pvec(), a in 0.01f64..0.99, b in 0.01f64..0.99) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let small = bh_select(&pv(&values), lo, values.len()).unwrap().selected;
            let large = bh_select(&pv(&values), hi, values.len()).unwrap().selected;
            prop_assert!(small.iter().all(|j| large.contains(j)));
        }

        #[test]
        fn scale_monotone(values in pvec(), c1 in 0.1f64..3.0, c2 in 0.1f64..3.0, alpha in 0.01f64..0.99) {
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            let scaled = |c: f64| pv(&values.iter().map(|p| p * c).collect::<Vec<_>>());
            let at_lo = bh_select(&scaled(lo), alpha, values.len()).unwrap().selected;
            let at_hi = bh_select(&scaled(hi), alpha, values.len()).unwrap().selected;
            prop_assert!(at_hi.iter().all(|j| at_lo.contains(j)));
        }

        #[test]
        fn permutation_equivariant(values in pvec(), alpha in 0.01f64..0.99, rot in 0usize..12) {
            let m = values.len();
            let rot = rot % m;
            let perm: Vec<usize> = (0..m).map(|i| (i + rot) % m).collect();
            let permuted: Vec<f64> = perm.iter().map(|&i| values[i]).collect();
            let base = bh_select(&pv(&values), alpha, m).unwrap().selected;
            let mut mapped: Vec<usize> = bh_select(&pv(&permuted), alpha, m)
                .unwrap()
                .selected
                .into_iter()
                .map(|j| perm[j])
                .collect();
            mapped.sort_unstable();
            prop_assert_eq!(base, mapped);
        }

        #[test]
        fn subtraction_dominates_vanilla_when_estimate_nonnegative(
            cal in prop::collection::vec(-3.0f64..3.0, 20..80),
            test in prop::collection::vec(-5.0f64..3.0, 1..60),
            alpha in 0.05f64..0.5,
        ) {
            let sub = identify_scores(&cal, &test, alpha, &EstimatorSpec::subtraction(0.2), None).unwrap();
            let van = identify_scores(&cal, &test, alpha, &EstimatorSpec::none(), None).unwrap();
            if sub.estimate.pi_hat >= 0.0 {
                prop_assert!(sub.selected.len() >= van.selected.len());
                prop_assert!(van.selected.iter().all(|j| sub.selected.contains(j)));
            }
        }
    }
}

//! Serialized outputs: selection and estimate documents (JSON) and
//! evaluation tables (CSV with a fixed header).

use std::io::{Read, Write};

use memsel_core::eval::CellConfig;
use memsel_core::{
    BiasMse, Diagnostics, EstimatorKind, EvalSummary, ProportionEstimate, SamplePool, SelectionResult,
};
use serde::{Deserialize, Serialize};

/// Column order of evaluation tables.
pub const EVAL_HEADER: [&str; 11] = [
    "alpha", "pi_test", "rho", "eta", "estimator", "trials", "fdr", "fdr_sd", "power", "power_sd",
    "mean_selected",
];

pub const BIAS_HEADER: [&str; 7] = ["pi_test", "estimator", "trials", "bias", "bias_se", "mse", "mse_se"];

#[derive(Debug, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagnosticsDoc {
    None,
    Subtraction { eta: f64, tau: f64, cal_in_region: usize, realized_fraction: f64, test_in_region: usize },
    Moment { mu0: f64, mu1: f64, mu_test: f64, pi0_raw: f64, variance: f64, theta: f64 },
}

impl From<&Diagnostics> for DiagnosticsDoc {
    fn from(d: &Diagnostics) -> Self {
        match *d {
            Diagnostics::None => DiagnosticsDoc::None,
            Diagnostics::Subtraction { eta, tau, cal_in_region, realized_fraction, test_in_region } => {
                DiagnosticsDoc::Subtraction { eta, tau, cal_in_region, realized_fraction, test_in_region }
            }
            Diagnostics::Moment { mu0, mu1, mu_test, pi0_raw, variance, theta } => {
                DiagnosticsDoc::Moment { mu0, mu1, mu_test, pi0_raw, variance, theta }
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EstimateDoc {
    pub estimator: &'static str,
    pub pi_hat: f64,
    pub scale_factor: f64,
    pub fallback_used: bool,
    pub diagnostics: DiagnosticsDoc,
}

impl EstimateDoc {
    pub fn new(kind: EstimatorKind, est: &ProportionEstimate) -> Self {
        Self {
            estimator: kind.as_str(),
            pi_hat: est.pi_hat,
            scale_factor: est.scale_factor,
            fallback_used: est.fallback_used,
            diagnostics: (&est.diagnostics).into(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PValueEntry<'a> {
    pub id: &'a str,
    pub p: f64,
    pub p_scaled: f64,
}

/// Level-set predictions; carries no error-rate guarantee and says so.
#[derive(Debug, Serialize)]
pub struct LevelSetDoc<'a> {
    pub guarantee: &'static str,
    pub tau: f64,
    pub predicted: Vec<&'a str>,
}

impl<'a> LevelSetDoc<'a> {
    pub fn new(test: &'a SamplePool, tau: f64) -> Self {
        let flags = memsel_core::threshold_classify(test, tau);
        let predicted = test
            .samples()
            .iter()
            .zip(flags)
            .filter_map(|(s, hit)| hit.then_some(s.id.as_str()))
            .collect();
        Self { guarantee: "none: level-set baseline without statistical guarantee", tau, predicted }
    }
}

#[derive(Debug, Serialize)]
pub struct SelectionDoc<'a> {
    pub alpha: f64,
    pub k_star: usize,
    pub threshold: f64,
    pub pi_hat: f64,
    pub scale_factor: f64,
    pub fallback_used: bool,
    pub estimator: EstimateDoc,
    pub selected: Vec<&'a str>,
    pub p_values: Vec<PValueEntry<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level_set_baseline: Option<LevelSetDoc<'a>>,
}

impl<'a> SelectionDoc<'a> {
    pub fn new(result: &SelectionResult, kind: EstimatorKind, test: &'a SamplePool) -> Self {
        let ids: Vec<&str> = test.samples().iter().map(|s| s.id.as_str()).collect();
        Self {
            alpha: result.alpha,
            k_star: result.k_star,
            threshold: result.threshold,
            pi_hat: result.estimate.pi_hat,
            scale_factor: result.estimate.scale_factor,
            fallback_used: result.estimate.fallback_used,
            estimator: EstimateDoc::new(kind, &result.estimate),
            selected: result.selected.iter().map(|&j| ids[j]).collect(),
            p_values: ids
                .iter()
                .zip(result.p_values.values.iter().zip(&result.p_scaled.values))
                .map(|(id, (&p, &p_scaled))| PValueEntry { id, p, p_scaled })
                .collect(),
            level_set_baseline: None,
        }
    }
}

/// One row of an evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub alpha: f64,
    pub pi_test: Option<f64>,
    pub rho: Option<f64>,
    pub eta: Option<f64>,
    pub estimator: String,
    pub trials: usize,
    pub fdr: f64,
    pub fdr_sd: f64,
    pub power: f64,
    pub power_sd: f64,
    pub mean_selected: f64,
}

impl From<&EvalSummary> for EvalRow {
    fn from(s: &EvalSummary) -> Self {
        let CellConfig { pi_test, rho, eta, estimator } = s.config;
        Self {
            alpha: s.alpha,
            pi_test,
            rho,
            eta,
            estimator: estimator.as_str().into(),
            trials: s.trials,
            fdr: s.fdr,
            fdr_sd: s.fdr_sd,
            power: s.power_mean,
            power_sd: s.power_sd,
            mean_selected: s.mean_selected,
        }
    }
}

pub fn write_eval_csv<W: Write>(w: W, rows: &[EvalSummary]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(EvalRow::from(row))?;
    }
    if rows.is_empty() {
        out.write_record(EVAL_HEADER)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("header mismatch: missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("no rows")]
    NoRows,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Reads an evaluation table. Unknown extra columns are ignored.
pub fn read_eval_csv<R: Read>(r: R) -> Result<Vec<EvalRow>, TableError> {
    let mut reader = csv::Reader::from_reader(r);
    let headers = reader.headers()?.clone();
    for column in EVAL_HEADER {
        if !headers.iter().any(|h| h == column) {
            return Err(TableError::MissingColumn(column));
        }
    }
    let rows = reader.deserialize().collect::<Result<Vec<EvalRow>, _>>()?;
    if rows.is_empty() {
        return Err(TableError::NoRows);
    }
    Ok(rows)
}

#[derive(Debug, Serialize)]
struct BiasRow<'a> {
    pi_test: f64,
    estimator: &'a str,
    trials: usize,
    bias: f64,
    bias_se: f64,
    mse: f64,
    mse_se: f64,
}

pub fn write_bias_csv<W: Write>(w: W, kind: EstimatorKind, rows: &[BiasMse]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(BiasRow {
            pi_test: r.pi_test,
            estimator: kind.as_str(),
            trials: r.trials,
            bias: r.bias,
            bias_se: r.bias_se,
            mse: r.mse,
            mse_se: r.mse_se,
        })?;
    }
    if rows.is_empty() {
        out.write_record(BIAS_HEADER)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use memsel_core::{identify_scores, EstimatorSpec, ScoredSample};

    fn summary(alpha: f64) -> EvalSummary {
        EvalSummary {
            alpha,
            fdr: 0.04,
            fdr_sd: 0.1,
            power_mean: 0.5,
            power_sd: 0.2,
            mean_selected: 12.5,
            pi_hat_mean: 0.3,
            trials: 100,
            config: CellConfig { pi_test: Some(0.5), rho: None, eta: Some(0.05), estimator: EstimatorKind::Subtraction },
        }
    }

    #[test]
    fn eval_csv_header_and_round_trip() {
        let mut out = Vec::new();
        write_eval_csv(&mut out, &[summary(0.1), summary(0.2)]).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), EVAL_HEADER.join(","));
        assert_eq!(text.lines().nth(1).unwrap(), "0.1,0.5,,0.05,subtraction,100,0.04,0.1,0.5,0.2,12.5");
        let rows = read_eval_csv(out.as_slice()).unwrap();
        assert_eq!(rows, vec![EvalRow::from(&summary(0.1)), EvalRow::from(&summary(0.2))]);
    }

    #[test]
    fn eval_csv_reader_is_tolerant_but_strict_on_required_columns() {
        let extra = format!("{},extra\n0.1,,,,none,10,0,0,1,0,3,zzz\n", EVAL_HEADER.join(","));
        assert_eq!(read_eval_csv(extra.as_bytes()).unwrap().len(), 1);
        let empty = format!("{}\n", EVAL_HEADER.join(","));
        assert!(matches!(read_eval_csv(empty.as_bytes()), Err(TableError::NoRows)));
        let missing = "alpha,fdr\n0.1,0.0\n";
        assert!(matches!(read_eval_csv(missing.as_bytes()), Err(TableError::MissingColumn("pi_test"))));
    }

    #[test]
    fn selection_document_shape() {
        let test = SamplePool::new(vec![
            ScoredSample::new("x", 0.5, None),
            ScoredSample::new("y", 9.0, None),
        ])
        .unwrap();
        let cal = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        let r = identify_scores(&cal, &test.scores(), 0.5, &EstimatorSpec::none(), None).unwrap();
        let mut doc = SelectionDoc::new(&r, EstimatorKind::None, &test);
        doc.level_set_baseline = Some(LevelSetDoc::new(&test, 1.0));
        let v = serde_json::to_value(&doc).unwrap();
        for key in ["alpha", "k_star", "threshold", "pi_hat", "scale_factor", "fallback_used", "selected", "p_values"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["selected"], serde_json::json!(["x"]));
        assert_eq!(v["p_values"][1]["id"], "y");
        assert_eq!(v["p_values"][0]["p"], 0.1);
        assert!(v["level_set_baseline"]["guarantee"].as_str().unwrap().starts_with("none"));
        assert_eq!(v["estimator"]["diagnostics"]["kind"], "none");
    }
}

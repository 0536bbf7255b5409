//! Detection scores computed from token-level model outputs.
//!
//! Every score is oriented so that a lower value means the sample looks more
//! like training data.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::sample::{PositionDist, SamplePool, ScoredSample, TokenRecord, TrueToken};

/// Compression level used for the Zlib score (the zlib library default).
pub const ZLIB_LEVEL: u8 = 6;

fn check_nonempty(rec: &TokenRecord) -> Result<()> {
    if rec.token_logprobs.is_empty() {
        Err(Error::EmptySequence)
    } else {
        Ok(())
    }
}

fn check_k(k_percent: f64) -> Result<()> {
    if k_percent > 0.0 && k_percent <= 100.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("k = {k_percent} must lie in (0, 100]")))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() && gamma != 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("gamma = {gamma} must be positive and != 1")))
    }
}

fn finite(value: f64, what: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteScore(what))
    }
}

fn positions<'a>(rec: &'a TokenRecord, score: &'static str) -> Result<&'a [PositionDist]> {
    check_nonempty(rec)?;
    rec.positions.as_deref().ok_or(Error::MissingPositions(score))
}

/// Negative total log-likelihood, the logarithm of the unnormalized perplexity.
fn neg_log_likelihood(rec: &TokenRecord) -> f64 {
    -rec.token_logprobs.iter().sum::<f64>()
}

/// `exp(-sum log p)`, or `exp(-(1/L) sum log p)` with `length_normalize`.
///
/// The unnormalized form overflows for long or poorly predicted sequences;
/// that is reported as [`Error::NonFiniteScore`].
pub fn perplexity(rec: &TokenRecord, length_normalize: bool) -> Result<f64> {
    check_nonempty(rec)?;
    let mut nll = neg_log_likelihood(rec);
    if length_normalize {
        nll /= rec.len() as f64;
    }
    finite(libm::exp(nll), "perplexity overflow; try length normalization")
}

/// Negated mean of the `max(1, floor(L*k/100))` smallest token log-probs.
pub fn min_k(rec: &TokenRecord, k_percent: f64) -> Result<f64> {
    check_nonempty(rec)?;
    check_k(k_percent)?;
    let len = rec.len();
    let count = (libm::floor(len as f64 * k_percent / 100.0) as usize).clamp(1, len);
    let mut lp = rec.token_logprobs.clone();
    lp.sort_unstable_by(f64::total_cmp);
    Ok(-lp[..count].iter().sum::<f64>() / count as f64)
}

/// Log-perplexity divided by the zlib-compressed size of the text in bits.
pub fn zlib_ratio(rec: &TokenRecord) -> Result<f64> {
    check_nonempty(rec)?;
    let text = rec.text.as_deref().filter(|t| !t.is_empty()).ok_or(Error::MissingText)?;
    let compressed = miniz_oxide::deflate::compress_to_vec_zlib(text.as_bytes(), ZLIB_LEVEL);
    if compressed.is_empty() {
        return Err(Error::EmptyCompression);
    }
    Ok(neg_log_likelihood(rec) / (8.0 * compressed.len() as f64))
}

fn m_entropy_at(dist: &PositionDist, position: usize) -> Result<f64> {
    let p_y = dist.true_prob();
    if p_y <= 0.0 {
        return Err(Error::ZeroTrueTokenProbability(position));
    }
    let mut value = -(1.0 - p_y) * libm::log(p_y);
    let others = dist.probs.iter().enumerate().filter_map(|(i, &p)| {
        (dist.true_token != TrueToken::Index(i)).then_some(p)
    });
    let tail = (dist.true_token != TrueToken::Tail && dist.tail_mass > 0.0)
        .then_some(dist.tail_mass);
    for p in others.chain(tail) {
        if p > 0.0 {
            value -= p * libm::log(1.0 - p);
        }
    }
    finite(value, "m_entropy")
}

/// Mean per-position modified entropy. A truncated tail is one pseudo-token
/// and can be the realized token only when it has positive mass.
pub fn m_entropy(rec: &TokenRecord) -> Result<f64> {
    let dists = positions(rec, "M-Entropy")?;
    let total = dists
        .iter()
        .enumerate()
        .map(|(i, d)| m_entropy_at(d, i))
        .sum::<Result<f64>>()?;
    Ok(total / dists.len() as f64)
}

fn renyi_at(dist: &PositionDist, gamma: f64, standard: bool) -> f64 {
    let power_sum: f64 = dist.masses().filter(|&p| p > 0.0).map(|p| libm::pow(p, gamma)).sum();
    let log_sum = libm::log(power_sum);
    if standard {
        log_sum / (1.0 - gamma)
    } else {
        -log_sum
    }
}

fn renyi_values(rec: &TokenRecord, gamma: f64, standard: bool) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    let dists = positions(rec, "Renyi")?;
    dists
        .iter()
        .map(|d| finite(renyi_at(d, gamma, standard), "renyi"))
        .collect()
}

/// Mean per-position Rényi quantity.
///
/// With `standard_normalization` off this is `-(1/L) sum log sum_v p_v^gamma`;
/// with it on, the usual Rényi entropy `(1/L) sum log(sum_v p_v^gamma) / (1 - gamma)`.
pub fn renyi_entropy(rec: &TokenRecord, gamma: f64, standard_normalization: bool) -> Result<f64> {
    let values = renyi_values(rec, gamma, standard_normalization)?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Mean of the `ceil(L*k/100)` largest per-position Rényi values.
pub fn max_renyi_k(
    rec: &TokenRecord,
    k_percent: f64,
    gamma: f64,
    standard_normalization: bool,
) -> Result<f64> {
    check_k(k_percent)?;
    let mut values = renyi_values(rec, gamma, standard_normalization)?;
    let len = values.len();
    let count = (libm::ceil(len as f64 * k_percent / 100.0) as usize).clamp(1, len);
    values.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(values[..count].iter().sum::<f64>() / count as f64)
}

/// A detection score with its hyperparameters.
///
/// Parses from and formats to the command-line syntax: `perplexity[,norm]`,
/// `min_k:K`, `zlib`, `m_entropy`, `renyi:GAMMA[,std]`, `max_renyi:K,GAMMA[,std]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scorer {
    Perplexity { length_normalize: bool },
    MinK { k_percent: f64 },
    Zlib,
    MEntropy,
    Renyi { gamma: f64, standard: bool },
    MaxRenyi { k_percent: f64, gamma: f64, standard: bool },
}

impl Scorer {
    pub fn score(&self, rec: &TokenRecord) -> Result<f64> {
        match *self {
            Scorer::Perplexity { length_normalize } => perplexity(rec, length_normalize),
            Scorer::MinK { k_percent } => min_k(rec, k_percent),
            Scorer::Zlib => zlib_ratio(rec),
            Scorer::MEntropy => m_entropy(rec),
            Scorer::Renyi { gamma, standard } => renyi_entropy(rec, gamma, standard),
            Scorer::MaxRenyi { k_percent, gamma, standard } => {
                max_renyi_k(rec, k_percent, gamma, standard)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Scorer::MinK { k_percent } => check_k(k_percent),
            Scorer::Renyi { gamma, .. } => check_gamma(gamma),
            Scorer::MaxRenyi { k_percent, gamma, .. } => check_k(k_percent).and(check_gamma(gamma)),
            _ => Ok(()),
        }
    }
}

impl FromStr for Scorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unrecognized scorer {s:?}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let (name, params) = match s.split_once(':') {
            Some((name, params)) => (name, Some(params)),
            None => match s.split_once(',') {
                Some((name, rest)) => (name, Some(rest)),
                None => (s, None),
            },
        };
        let parts: Vec<&str> = params.map(|p| p.split(',').collect()).unwrap_or_default();
        let std_flag = |flag: Option<&&str>| match flag {
            None => Ok(false),
            Some(&"std") => Ok(true),
            Some(_) => Err(bad()),
        };
        let scorer = match (name.trim(), parts.as_slice()) {
            ("perplexity", []) => Scorer::Perplexity { length_normalize: false },
            ("perplexity", ["norm"]) => Scorer::Perplexity { length_normalize: true },
            ("min_k", [k]) => Scorer::MinK { k_percent: num(k)? },
            ("zlib", []) => Scorer::Zlib,
            ("m_entropy", []) => Scorer::MEntropy,
            ("renyi", [g, rest @ ..]) if rest.len() <= 1 => {
                Scorer::Renyi { gamma: num(g)?, standard: std_flag(rest.first())? }
            }
            ("max_renyi", [k, g, rest @ ..]) if rest.len() <= 1 => Scorer::MaxRenyi {
                k_percent: num(k)?,
                gamma: num(g)?,
                standard: std_flag(rest.first())?,
            },
            _ => return Err(bad()),
        };
        scorer.validate()?;
        Ok(scorer)
    }
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let std_suffix = |on: bool| if on { ",std" } else { "" };
        match *self {
            Scorer::Perplexity { length_normalize: false } => f.write_str("perplexity"),
            Scorer::Perplexity { length_normalize: true } => f.write_str("perplexity,norm"),
            Scorer::MinK { k_percent } => write!(f, "min_k:{k_percent}"),
            Scorer::Zlib => f.write_str("zlib"),
            Scorer::MEntropy => f.write_str("m_entropy"),
            Scorer::Renyi { gamma, standard } => write!(f, "renyi:{gamma}{}", std_suffix(standard)),
            Scorer::MaxRenyi { k_percent, gamma, standard } => {
                write!(f, "max_renyi:{k_percent},{gamma}{}", std_suffix(standard))
            }
        }
    }
}

/// Scores every record in order. Labels, when given, fill the member field by id.
pub fn score_pool(
    recs: &[TokenRecord],
    scorer: &Scorer,
    labels: Option<&BTreeMap<String, bool>>,
) -> Result<SamplePool> {
    let samples = recs
        .iter()
        .map(|rec| {
            let score = scorer.score(rec).map_err(|e| e.in_record(&rec.id))?;
            let member = labels.and_then(|l| l.get(&rec.id).copied());
            Ok(ScoredSample::new(rec.id.clone(), score, member))
        })
        .collect::<Result<Vec<_>>>()?;
    SamplePool::new(samples)
}

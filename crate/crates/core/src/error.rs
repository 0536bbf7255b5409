use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("token_logprobs must be non-empty")]
    EmptySequence,

    #[error("token log-probability {value} at position {position} must be finite and <= 0")]
    InvalidLogProb { position: usize, value: f64 },

    #[error("length mismatch: {logprobs} token log-probs but {positions} position distributions")]
    LengthMismatch { logprobs: usize, positions: usize },

    #[error("probability mass {mass} at position {position} is outside 1 +/- 1e-6")]
    ProbabilityMass { position: usize, mass: f64 },

    #[error("invalid distribution at position {position}: {reason}")]
    InvalidDistribution { position: usize, reason: &'static str },

    #[error("text required for Zlib score")]
    MissingText,

    #[error("position distributions required for {0} score")]
    MissingPositions(&'static str),

    #[error("true token has zero probability at position {0}")]
    ZeroTrueTokenProbability(usize),

    #[error("score is not finite ({0})")]
    NonFiniteScore(&'static str),

    #[error("compressed text is empty")]
    EmptyCompression,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),

    #[error("sample {0:?} has no member label")]
    MissingLabel(String),

    #[error("empty calibration set")]
    EmptyCalibration,

    #[error("pi_test = {pi_test} unattainable: need {needed} members but only {available} available")]
    PiTestUnattainable { pi_test: f64, needed: usize, available: usize },

    #[error("region empty: floor(eta * n) = 0 for eta = {eta}, n = {n}; use a larger eta or calibration set")]
    RegionEmpty { eta: f64, n: usize },

    #[error("means too close: |mu1 - mu0| = {gap} does not exceed tolerance; the score is uninformative")]
    MeansTooClose { gap: f64 },

    #[error("{name} needs at least {needed} samples, got {got}")]
    PoolTooSmall { name: &'static str, needed: usize, got: usize },

    #[error("pi_hat = {0} must be < 1")]
    ProportionOutOfRange(f64),

    #[error("alpha = {0} must lie in (0, 1)")]
    InvalidAlpha(f64),

    #[error("p-value {value} at index {index} must be finite and > 0")]
    InvalidPValue { index: usize, value: f64 },

    #[error("expected {expected} p-values, got {got}")]
    PValueCount { expected: usize, got: usize },

    #[error("members file required for the adjusted moment estimator")]
    MissingCalMembers,

    #[error("selected index {0} has no label")]
    UnlabeledSelection(usize),

    #[error("labels cover {got} of {expected} test samples")]
    IncompleteLabels { expected: usize, got: usize },

    #[error("eta axis requires subtraction estimator")]
    EtaAxisRequiresSubtraction,

    #[error("record {id:?}: {cause}")]
    Record { id: String, cause: Box<Error> },

    #[error("trial {index}: {cause}")]
    Trial { index: u64, cause: Box<Error> },
}

impl Error {
    pub(crate) fn in_record(self, id: &str) -> Self {
        Error::Record { id: id.into(), cause: Box::new(self) }
    }

    pub(crate) fn in_trial(self, index: u64) -> Self {
        Error::Trial { index, cause: Box::new(self) }
    }
}

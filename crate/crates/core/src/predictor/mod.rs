//! Probabilistic pleasantness prediction for candidate augmentations.
//!
//! A backend scores each candidate (masker + gain at a given
//! signal-to-ambient ratio) with a normal distribution over the [-1, 1]
//! pleasantness scale, plus a baseline distribution for leaving the ambient
//! alone. Candidates are then ranked by expected improvement over that
//! baseline.

mod features;
mod remote;
mod surrogate;
pub mod wire;

pub use features::{AmbientFeatures, FeatureOptions};
pub use remote::{RemotePredictor, DEFAULT_TIMEOUT};
pub use surrogate::{SurrogateConfig, SurrogatePredictor, PREFERRED_SMR_DB};

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::acoustics::AcousticsError;
use crate::bank::MaskerClass;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("no candidates supplied")]
    NoCandidates,
    #[error("{candidates} candidates but {distributions} distributions")]
    LengthMismatch {
        candidates: usize,
        distributions: usize,
    },
    #[error("invalid distribution: mean {mean}, std {std}")]
    InvalidDistribution { mean: f64, std: f64 },
    #[error("invalid candidate '{masker_id}': {message}")]
    InvalidCandidate { masker_id: String, message: String },
    #[error("ambient features: {0}")]
    Features(String),
    #[error("backend '{backend}': {message}")]
    Backend {
        backend: &'static str,
        message: String,
    },
    #[error(transparent)]
    Acoustics(#[from] AcousticsError),
}

/// Which backend actually produced a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendTag {
    Surrogate,
    Remote,
    RemoteFallback,
}

impl fmt::Display for BackendTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendTag::Surrogate => "surrogate",
            BackendTag::Remote => "remote",
            BackendTag::RemoteFallback => "remote-fallback",
        })
    }
}

/// Normal distribution over the [-1, 1] pleasantness scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoplDistribution {
    pub mean: f64,
    pub std: f64,
}

impl IsoplDistribution {
    pub fn new(mean: f64, std: f64) -> Result<Self, PredictError> {
        if !mean.is_finite() || !(-1.0..=1.0).contains(&mean) || !std.is_finite() || std < 0.0 {
            return Err(PredictError::InvalidDistribution { mean, std });
        }
        Ok(IsoplDistribution { mean, std })
    }
}

/// A masker played at a specific gain, described to the predictor by the
/// signal-to-ambient ratio it would produce at the listener.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateAugmentation {
    pub masker_id: String,
    pub class: MaskerClass,
    pub digital_gain: f64,
    /// Masker listener SPL minus ambient LAeq, dB.
    pub smr: f64,
}

impl CandidateAugmentation {
    pub fn new(
        masker_id: String,
        class: MaskerClass,
        digital_gain: f64,
        smr: f64,
    ) -> Result<Self, PredictError> {
        if !(digital_gain.is_finite() && digital_gain > 0.0) {
            return Err(PredictError::InvalidCandidate {
                masker_id,
                message: format!("gain {digital_gain} not positive"),
            });
        }
        if !smr.is_finite() {
            return Err(PredictError::InvalidCandidate {
                masker_id,
                message: format!("smr {smr} not finite"),
            });
        }
        Ok(CandidateAugmentation {
            masker_id,
            class,
            digital_gain,
            smr,
        })
    }
}

/// Backend output for one interval: baseline plus one distribution per
/// candidate, in candidate order.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub baseline: IsoplDistribution,
    pub candidates: Vec<IsoplDistribution>,
    pub backend: BackendTag,
}

pub trait IsoplPredictor: Send + Sync {
    fn name(&self) -> &'static str;

    /// One distribution per candidate plus the unaugmented baseline.
    /// Deterministic given the backend and inputs.
    fn predict(
        &self,
        ambient: &AmbientFeatures,
        candidates: &[CandidateAugmentation],
    ) -> Result<Prediction, PredictError>;
}

/// How candidates are ordered against the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankCriterion {
    /// `mean(candidate) − mean(baseline)`, descending.
    #[default]
    MeanImprovement,
    /// `P(candidate > baseline)` under independent normals, descending.
    ExceedanceProbability,
}

/// Probability that a draw from `candidate` exceeds a draw from
/// `baseline`, both normal and independent.
pub fn improvement_probability(
    candidate: IsoplDistribution,
    baseline: IsoplDistribution,
) -> f64 {
    let var = candidate.std * candidate.std + baseline.std * baseline.std;
    let delta = candidate.mean - baseline.mean;
    if var == 0.0 {
        return if delta > 0.0 {
            1.0
        } else if delta < 0.0 {
            0.0
        } else {
            0.5
        };
    }
    let unit = Normal::standard();
    unit.cdf(delta / var.sqrt())
}

/// Returns candidate indices from best to worst. Ties break toward the
/// lower gain, then the lexicographically smaller masker id, then the
/// original index, so the result is a deterministic total order.
pub fn rank_candidates(
    candidates: &[CandidateAugmentation],
    dists: &[IsoplDistribution],
    baseline: IsoplDistribution,
    criterion: RankCriterion,
) -> Result<Vec<usize>, PredictError> {
    if candidates.is_empty() {
        return Err(PredictError::NoCandidates);
    }
    if candidates.len() != dists.len() {
        return Err(PredictError::LengthMismatch {
            candidates: candidates.len(),
            distributions: dists.len(),
        });
    }
    let score = |d: IsoplDistribution| match criterion {
        RankCriterion::MeanImprovement => d.mean - baseline.mean,
        RankCriterion::ExceedanceProbability => improvement_probability(d, baseline),
    };
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (score(dists[i]), score(dists[j]));
        b.partial_cmp(&a)
            .expect("finite scores")
            .then_with(|| {
                candidates[i]
                    .digital_gain
                    .partial_cmp(&candidates[j].digital_gain)
                    .expect("finite gains")
            })
            .then_with(|| candidates[i].masker_id.cmp(&candidates[j].masker_id))
            .then_with(|| i.cmp(&j))
    });
    Ok(order)
}

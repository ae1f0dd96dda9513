//! Local deterministic predictor.
//!
//! A transparent stand-in for a learned pleasantness model: a tanh of a
//! linear score in mix level, source naturalness and distance of the SMR
//! from the preferred −3 dB operating point. Useful for desk-scale
//! reproduction and as the fallback when a remote backend is unreachable.

use serde::{Deserialize, Serialize};

use super::{
    AmbientFeatures, BackendTag, CandidateAugmentation, IsoplDistribution, IsoplPredictor,
    PredictError, Prediction,
};
use crate::acoustics::energetic_combine;

/// Preferred masker-to-ambient ratio, dB. Maskers well below the ambient
/// are inaudible; maskers above it become the annoyance.
pub const PREFERRED_SMR_DB: f64 = -3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    /// Constant offset of the linear score.
    pub bias: f64,
    /// Weight on `(reference_level − L_mix)/10`.
    pub level_weight: f64,
    /// Bonus for natural-source maskers (birds, water, wind).
    pub naturalness_weight: f64,
    /// Penalty weight on `|smr − preferred|/10`.
    pub smr_weight: f64,
    /// Reported standard deviation (constant).
    pub std: f64,
    /// Mix level at which the level term vanishes, dBA.
    pub reference_level: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            bias: 0.0,
            level_weight: 0.5,
            naturalness_weight: 0.4,
            smr_weight: 0.6,
            std: 0.1,
            reference_level: 65.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SurrogatePredictor {
    config: SurrogateConfig,
}

impl SurrogatePredictor {
    pub fn new(config: SurrogateConfig) -> Result<Self, PredictError> {
        let ok = config.std >= 0.0
            && [
                config.bias,
                config.level_weight,
                config.naturalness_weight,
                config.smr_weight,
                config.std,
                config.reference_level,
            ]
            .iter()
            .all(|v| v.is_finite());
        if !ok {
            return Err(PredictError::Backend {
                backend: "surrogate",
                message: format!("invalid config {config:?}"),
            });
        }
        Ok(SurrogatePredictor { config })
    }

    pub fn config(&self) -> &SurrogateConfig {
        &self.config
    }

    /// Distribution for one candidate on top of the given ambient.
    pub fn predict_one(
        &self,
        ambient: &AmbientFeatures,
        candidate: &CandidateAugmentation,
    ) -> IsoplDistribution {
        let c = &self.config;
        let masker_spl = ambient.laeq() + candidate.smr;
        let l_mix = energetic_combine(&[ambient.laeq(), masker_spl]).expect("two levels");
        let naturalness = if candidate.class.is_natural() { 1.0 } else { 0.0 };
        let score = c.bias
            + c.level_weight * (c.reference_level - l_mix) / 10.0
            + c.naturalness_weight * naturalness
            - c.smr_weight * (candidate.smr - PREFERRED_SMR_DB).abs() / 10.0;
        IsoplDistribution {
            mean: score.tanh().clamp(-1.0, 1.0),
            std: c.std,
        }
    }

    /// Distribution for leaving the ambient unaugmented.
    pub fn baseline(&self, ambient: &AmbientFeatures) -> IsoplDistribution {
        let c = &self.config;
        let score = c.bias + c.level_weight * (c.reference_level - ambient.laeq()) / 10.0;
        IsoplDistribution {
            mean: score.tanh().clamp(-1.0, 1.0),
            std: c.std,
        }
    }
}

impl IsoplPredictor for SurrogatePredictor {
    fn name(&self) -> &'static str {
        "surrogate"
    }

    fn predict(
        &self,
        ambient: &AmbientFeatures,
        candidates: &[CandidateAugmentation],
    ) -> Result<Prediction, PredictError> {
        if candidates.is_empty() {
            return Err(PredictError::NoCandidates);
        }
        Ok(Prediction {
            baseline: self.baseline(ambient),
            candidates: candidates
                .iter()
                .map(|c| self.predict_one(ambient, c))
                .collect(),
            backend: BackendTag::Surrogate,
        })
    }
}

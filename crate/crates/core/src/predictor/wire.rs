//! JSON wire types shared by the remote predictor client and the inference
//! service. Field names and nesting are part of the protocol; do not rename.

use serde::{Deserialize, Serialize};

use super::{AmbientFeatures, CandidateAugmentation, IsoplDistribution, PredictError};
use crate::bank::MaskerClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireAmbient {
    pub laeq: f64,
    pub band_energies: Vec<Vec<f64>>,
    pub frame_hop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireCandidate {
    pub masker_id: String,
    pub class: MaskerClass,
    pub gain: f64,
    pub smr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub ambient: WireAmbient,
    pub candidates: Vec<WireCandidate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireDistribution {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireCandidateResult {
    pub masker_id: String,
    pub gain: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub baseline: WireDistribution,
    pub candidates: Vec<WireCandidateResult>,
}

impl PredictRequest {
    pub fn from_parts(ambient: &AmbientFeatures, candidates: &[CandidateAugmentation]) -> Self {
        PredictRequest {
            ambient: WireAmbient {
                laeq: ambient.laeq(),
                band_energies: ambient.band_energies().to_vec(),
                frame_hop: ambient.frame_hop(),
            },
            candidates: candidates
                .iter()
                .map(|c| WireCandidate {
                    masker_id: c.masker_id.clone(),
                    class: c.class,
                    gain: c.digital_gain,
                    smr: c.smr,
                })
                .collect(),
        }
    }

    pub fn to_parts(&self) -> Result<(AmbientFeatures, Vec<CandidateAugmentation>), PredictError> {
        let ambient = AmbientFeatures::new(
            self.ambient.band_energies.clone(),
            self.ambient.frame_hop,
            self.ambient.laeq,
        )?;
        let candidates = self
            .candidates
            .iter()
            .map(|c| CandidateAugmentation::new(c.masker_id.clone(), c.class, c.gain, c.smr))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((ambient, candidates))
    }
}

impl From<IsoplDistribution> for WireDistribution {
    fn from(d: IsoplDistribution) -> Self {
        WireDistribution {
            mean: d.mean,
            std: d.std,
        }
    }
}

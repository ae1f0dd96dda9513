//! HTTP client for a remote inference backend, with local fallback.
//!
//! One POST per interval. Any transport failure, timeout, non-2xx status
//! or response that does not echo the full candidate batch causes the whole
//! batch to be served by the local surrogate instead, and the prediction is
//! tagged accordingly so session logs keep their provenance.

use std::time::Duration;

use log::warn;

use super::wire::{PredictRequest, PredictResponse};
use super::{
    AmbientFeatures, BackendTag, CandidateAugmentation, IsoplDistribution, IsoplPredictor,
    PredictError, Prediction, SurrogateConfig, SurrogatePredictor,
};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

pub struct RemotePredictor {
    endpoint: String,
    agent: ureq::Agent,
    fallback: SurrogatePredictor,
}

impl RemotePredictor {
    /// `endpoint` is the service base URL, e.g. `http://10.0.0.5:8731`.
    pub fn new(
        endpoint: &str,
        timeout: Duration,
        fallback_config: SurrogateConfig,
    ) -> Result<Self, PredictError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Ok(RemotePredictor {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            agent,
            fallback: SurrogatePredictor::new(fallback_config)?,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn request(
        &self,
        ambient: &AmbientFeatures,
        candidates: &[CandidateAugmentation],
    ) -> Result<Prediction, PredictError> {
        let req = PredictRequest::from_parts(ambient, candidates);
        let url = format!("{}/v1/predict", self.endpoint);
        let remote_err = |message: String| PredictError::Backend {
            backend: "remote",
            message,
        };

        let mut response = self
            .agent
            .post(&url)
            .send_json(&req)
            .map_err(|e| remote_err(e.to_string()))?;
        let parsed: PredictResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| remote_err(format!("invalid response body: {e}")))?;

        // All-or-nothing: the response must echo every candidate, in order.
        if parsed.candidates.len() != candidates.len() {
            return Err(remote_err(format!(
                "response covers {} of {} candidates",
                parsed.candidates.len(),
                candidates.len()
            )));
        }
        for (got, want) in parsed.candidates.iter().zip(candidates.iter()) {
            if got.masker_id != want.masker_id || got.gain != want.digital_gain {
                return Err(remote_err(format!(
                    "response candidate ({}, {}) does not match request ({}, {})",
                    got.masker_id, got.gain, want.masker_id, want.digital_gain
                )));
            }
        }

        let baseline = IsoplDistribution::new(parsed.baseline.mean, parsed.baseline.std)
            .map_err(|e| remote_err(format!("baseline: {e}")))?;
        let dists = parsed
            .candidates
            .iter()
            .map(|c| {
                IsoplDistribution::new(c.mean, c.std)
                    .map_err(|e| remote_err(format!("candidate {}: {e}", c.masker_id)))
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Prediction {
            baseline,
            candidates: dists,
            backend: BackendTag::Remote,
        })
    }
}

impl IsoplPredictor for RemotePredictor {
    fn name(&self) -> &'static str {
        "remote"
    }

    fn predict(
        &self,
        ambient: &AmbientFeatures,
        candidates: &[CandidateAugmentation],
    ) -> Result<Prediction, PredictError> {
        if candidates.is_empty() {
            return Err(PredictError::NoCandidates);
        }
        match self.request(ambient, candidates) {
            Ok(prediction) => Ok(prediction),
            Err(err) => {
                warn!("remote predictor at {} failed ({err}); falling back", self.endpoint);
                let mut prediction = self.fallback.predict(ambient, candidates)?;
                prediction.backend = BackendTag::RemoteFallback;
                Ok(prediction)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank::MaskerClass;

    #[test]
    fn unreachable_endpoint_falls_back_to_surrogate() {
        // reserved TEST-NET-1 address: connection fails fast
        let p = RemotePredictor::new(
            "http://192.0.2.1:9",
            Duration::from_millis(200),
            SurrogateConfig::default(),
        )
        .unwrap();
        let ambient = AmbientFeatures::new(vec![vec![0.0; 4]; 4], 0.5, 65.0).unwrap();
        let c = CandidateAugmentation::new("m".into(), MaskerClass::Bird, 0.3, -3.0).unwrap();

        let out = p.predict(&ambient, &[c.clone()]).unwrap();
        assert_eq!(out.backend, BackendTag::RemoteFallback);

        let local = SurrogatePredictor::new(SurrogateConfig::default()).unwrap();
        let want = local.predict(&ambient, &[c]).unwrap();
        assert_eq!(out.baseline, want.baseline);
        assert_eq!(out.candidates, want.candidates);
    }

    #[test]
    fn strips_trailing_slash_from_endpoint() {
        let p = RemotePredictor::new(
            "http://example.invalid/",
            DEFAULT_TIMEOUT,
            SurrogateConfig::default(),
        )
        .unwrap();
        assert_eq!(p.endpoint(), "http://example.invalid");
    }
}

//! Pluggable loudness estimation.
//!
//! The reference backend is a deliberately simple power-law mapping from
//! fast A-weighted level to sones (doubling per 10 dB above 40 dBA). It is
//! an approximation, not a standardized loudness model; the trait exists so
//! a full model can be dropped in later.

use super::{apply_weighting, fast_level_series, AcousticsError, Waveform, Weighting};

pub trait LoudnessBackend {
    fn name(&self) -> &'static str;

    /// Loudness in sones per frame, frame length chosen by the backend.
    fn loudness_series(&self, w: &Waveform) -> Result<Vec<f64>, AcousticsError>;
}

/// `N = 2^((L − 40)/10)` on fast A-weighted levels per frame.
#[derive(Debug, Clone, Copy)]
pub struct PowerLawLoudness {
    pub frame_s: f64,
}

impl PowerLawLoudness {
    pub const DEFAULT_FRAME: f64 = 0.1;

    pub fn sones_from_level(level_dba: f64) -> f64 {
        2f64.powf((level_dba - 40.0) / 10.0)
    }
}

impl Default for PowerLawLoudness {
    fn default() -> Self {
        PowerLawLoudness {
            frame_s: Self::DEFAULT_FRAME,
        }
    }
}

impl LoudnessBackend for PowerLawLoudness {
    fn name(&self) -> &'static str {
        "power-law"
    }

    fn loudness_series(&self, w: &Waveform) -> Result<Vec<f64>, AcousticsError> {
        let weighted = apply_weighting(w, Weighting::A)?;
        let frames = fast_level_series(&weighted, self.frame_s)?;
        Ok(frames
            .levels
            .iter()
            .map(|&l| Self::sones_from_level(l))
            .collect())
    }
}

/// Convenience wrapper over [`LoudnessBackend::loudness_series`].
pub fn loudness_series(
    w: &Waveform,
    backend: &dyn LoudnessBackend,
) -> Result<Vec<f64>, AcousticsError> {
    backend.loudness_series(w)
}

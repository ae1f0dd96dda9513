//! Ambient-window feature extraction for the predictors.
//!
//! A generic log-energy filterbank over non-overlapping frames plus the
//! window's LAeq. The filterbank is intentionally plain (geometric band
//! edges, Hann window); its parameters travel with the features over the
//! wire so any backend can interpret them.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::PredictError;
use crate::acoustics::{apply_weighting, leq, Waveform, Weighting};

#[derive(Debug, Clone)]
pub struct FeatureOptions {
    /// Frame hop (= frame length; frames do not overlap), seconds.
    pub frame_hop: f64,
    /// Number of filterbank bands.
    pub bands: usize,
    /// Lower edge of the first band, Hz.
    pub min_frequency: f64,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            frame_hop: 0.5,
            bands: 64,
            min_frequency: 50.0,
        }
    }
}

/// Features summarizing one ambient window.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientFeatures {
    band_energies: Vec<Vec<f64>>,
    frame_hop: f64,
    laeq: f64,
}

impl AmbientFeatures {
    pub fn new(
        band_energies: Vec<Vec<f64>>,
        frame_hop: f64,
        laeq: f64,
    ) -> Result<Self, PredictError> {
        if band_energies.is_empty() {
            return Err(PredictError::Features("no frames".into()));
        }
        let bands = band_energies[0].len();
        if bands == 0 {
            return Err(PredictError::Features("no bands".into()));
        }
        if band_energies.iter().any(|f| f.len() != bands) {
            return Err(PredictError::Features("ragged band matrix".into()));
        }
        if band_energies.iter().flatten().any(|v| !v.is_finite()) {
            return Err(PredictError::Features("non-finite band energy".into()));
        }
        if !(frame_hop.is_finite() && frame_hop > 0.0) {
            return Err(PredictError::Features(format!("bad frame hop {frame_hop}")));
        }
        if !laeq.is_finite() {
            return Err(PredictError::Features(format!("bad laeq {laeq}")));
        }
        Ok(AmbientFeatures {
            band_energies,
            frame_hop,
            laeq,
        })
    }

    /// Extracts features from an ambient window: filterbank on the raw
    /// signal, LAeq via A-weighting.
    pub fn extract(window: &Waveform, opts: &FeatureOptions) -> Result<Self, PredictError> {
        let laeq = leq(&apply_weighting(window, Weighting::A)?);
        Self::extract_with_laeq(window, opts, laeq)
    }

    /// Like [`extract`](Self::extract) but reuses an already computed
    /// window LAeq (callers that batch-weight a whole recording).
    pub fn extract_with_laeq(
        window: &Waveform,
        opts: &FeatureOptions,
        laeq: f64,
    ) -> Result<Self, PredictError> {
        if opts.bands == 0 {
            return Err(PredictError::Features("bands must be >= 1".into()));
        }
        if !(opts.frame_hop.is_finite() && opts.frame_hop > 0.0) {
            return Err(PredictError::Features(format!(
                "bad frame hop {}",
                opts.frame_hop
            )));
        }
        let fs = window.sample_rate();
        let frame_len = (opts.frame_hop * fs).round() as usize;
        if frame_len < 2 {
            return Err(PredictError::Features("frame shorter than 2 samples".into()));
        }
        let frames = window.samples().len() / frame_len;
        if frames == 0 {
            return Err(PredictError::Features(format!(
                "window of {:.3} s shorter than one {:.3} s frame",
                window.duration(),
                opts.frame_hop
            )));
        }

        let fft_len = frame_len.next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(fft_len);
        let hann: Vec<f64> = (0..frame_len)
            .map(|i| {
                let x = std::f64::consts::PI * i as f64 / frame_len as f64;
                x.sin() * x.sin()
            })
            .collect();
        let edges = band_edges(opts, fs, fft_len);

        let mut band_energies = Vec::with_capacity(frames);
        let mut buf = vec![Complex::new(0.0, 0.0); fft_len];
        for f in 0..frames {
            let frame = &window.samples()[f * frame_len..(f + 1) * frame_len];
            for (i, slot) in buf.iter_mut().enumerate() {
                *slot = if i < frame_len {
                    Complex::new(frame[i] * hann[i], 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                };
            }
            fft.process(&mut buf);
            let mut row = Vec::with_capacity(opts.bands);
            for band in edges.windows(2) {
                let (lo, hi) = (band[0], band[1].max(band[0] + 1));
                let power: f64 = buf[lo..hi].iter().map(|c| c.norm_sqr()).sum();
                row.push((power + 1e-12).log10());
            }
            band_energies.push(row);
        }
        AmbientFeatures::new(band_energies, opts.frame_hop, laeq)
    }

    pub fn band_energies(&self) -> &[Vec<f64>] {
        &self.band_energies
    }

    pub fn frames(&self) -> usize {
        self.band_energies.len()
    }

    pub fn bands(&self) -> usize {
        self.band_energies[0].len()
    }

    pub fn frame_hop(&self) -> f64 {
        self.frame_hop
    }

    pub fn laeq(&self) -> f64 {
        self.laeq
    }
}

/// Geometric band-edge bins from `min_frequency` to just below Nyquist.
fn band_edges(opts: &FeatureOptions, fs: f64, fft_len: usize) -> Vec<usize> {
    let nyquist = fs / 2.0;
    let fmin = opts.min_frequency.min(nyquist / 4.0).max(1.0);
    let fmax = nyquist * 0.99;
    let ratio = (fmax / fmin).powf(1.0 / opts.bands as f64);
    let max_bin = fft_len / 2;
    let mut edges = Vec::with_capacity(opts.bands + 1);
    for b in 0..=opts.bands {
        let f = fmin * ratio.powi(b as i32);
        let bin = ((f / fs * fft_len as f64).round() as usize).min(max_bin);
        edges.push(bin);
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, fs: f64, seconds: f64) -> Waveform {
        let n = (fs * seconds) as usize;
        let samples = (0..n)
            .map(|i| 0.3 * (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin())
            .collect();
        Waveform::new(samples, fs, 94.0).unwrap()
    }

    #[test]
    fn frame_count_covers_the_window() {
        let w = tone(440.0, 32_000.0, 30.0);
        let f = AmbientFeatures::extract(&w, &FeatureOptions::default()).unwrap();
        assert_eq!(f.frames(), 60);
        assert_eq!(f.bands(), 64);
        assert!((f.frames() as f64 * f.frame_hop() - 30.0).abs() < 0.5);
    }

    #[test]
    fn tone_energy_lands_in_matching_band() {
        let fs = 32_000.0;
        let w = tone(1000.0, fs, 2.0);
        let f = AmbientFeatures::extract(&w, &FeatureOptions::default()).unwrap();
        let row = &f.band_energies()[0];
        let peak_band = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        // the band containing 1 kHz under the default 50 Hz..~15.8 kHz grid
        let opts = FeatureOptions::default();
        let fmin = 50.0f64;
        let fmax = fs / 2.0 * 0.99;
        let ratio = (fmax / fmin).powf(1.0 / opts.bands as f64);
        let expected = ((1000.0 / fmin).ln() / ratio.ln()).floor() as usize;
        assert!(
            peak_band == expected || peak_band + 1 == expected || peak_band == expected + 1,
            "peak {peak_band}, expected near {expected}"
        );
    }

    #[test]
    fn rejects_windows_shorter_than_a_frame() {
        let w = tone(440.0, 32_000.0, 0.2);
        assert!(AmbientFeatures::extract(&w, &FeatureOptions::default()).is_err());
    }

    #[test]
    fn validates_matrix_shape() {
        assert!(AmbientFeatures::new(vec![], 0.5, 60.0).is_err());
        assert!(AmbientFeatures::new(vec![vec![1.0], vec![1.0, 2.0]], 0.5, 60.0).is_err());
        assert!(AmbientFeatures::new(vec![vec![f64::NAN]], 0.5, 60.0).is_err());
        assert!(AmbientFeatures::new(vec![vec![1.0]], 0.0, 60.0).is_err());
        assert!(AmbientFeatures::new(vec![vec![1.0]], 0.5, 60.0).is_ok());
    }
}

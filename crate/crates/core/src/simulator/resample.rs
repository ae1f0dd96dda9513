//! One-shot sample-rate conversion for masker tracks.
//!
//! Direct-form Kaiser-windowed sinc interpolation, 32 taps per side. The
//! quality target is plumbing (get a masker onto the ambient clock), not
//! mastering: passband flat to well under 0.1 dB, aliasing rejection around
//! 90 dB, edges treated as silence.

use std::f64::consts::PI;

use super::SimError;

/// Taps on each side of the interpolation point.
const HALF_TAPS: isize = 32;
/// Kaiser window shape; 8.6 puts the stopband near -90 dB.
const KAISER_BETA: f64 = 8.6;
/// Fraction of the output Nyquist kept when band-limiting.
const CUTOFF_MARGIN: f64 = 0.945;

/// Modified Bessel function I0 by power series; plenty for window use.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..=50 {
        let f = half / k as f64;
        term *= f * f;
        sum += term;
        if term < 1e-16 * sum {
            break;
        }
    }
    sum
}

/// Resamples `input` from `from_rate` to `to_rate`. Output length is
/// `round(len · to/from)`; equal rates return the input unchanged.
pub fn resample(input: &[f64], from_rate: f64, to_rate: f64) -> Result<Vec<f64>, SimError> {
    for rate in [from_rate, to_rate] {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(SimError::InvalidRate(rate));
        }
    }
    if input.is_empty() {
        return Ok(Vec::new());
    }
    let ratio = to_rate / from_rate;
    if (ratio - 1.0).abs() < 1e-12 {
        return Ok(input.to_vec());
    }

    let out_len = ((input.len() as f64 * ratio).round() as usize).max(1);
    let cutoff = ratio.min(1.0) * CUTOFF_MARGIN;
    let window_denom = bessel_i0(KAISER_BETA);
    let len = input.len() as isize;

    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let t = j as f64 / ratio;
        let center = t.floor() as isize;
        let mut acc = 0.0;
        for i in (center - HALF_TAPS + 1)..=(center + HALF_TAPS) {
            if i < 0 || i >= len {
                continue;
            }
            let d = t - i as f64;
            let frac = d / HALF_TAPS as f64;
            if frac.abs() >= 1.0 {
                continue;
            }
            let window = bessel_i0(KAISER_BETA * (1.0 - frac * frac).sqrt()) / window_denom;
            let lowpass = if d == 0.0 {
                cutoff
            } else {
                (PI * cutoff * d).sin() / (PI * d)
            };
            acc += input[i as usize] * window * lowpass;
        }
        out.push(acc);
    }
    Ok(out)
}

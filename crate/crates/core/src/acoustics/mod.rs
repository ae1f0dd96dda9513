//! Objective acoustic and psychoacoustic metrics over calibrated waveforms.

mod loudness;
mod weighting;

pub use loudness::{loudness_series, LoudnessBackend, PowerLawLoudness};
pub use weighting::{apply_weighting, weighting_gain_db, Weighting, MIN_WEIGHTING_SAMPLE_RATE};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AcousticsError {
    #[error("sample rate {0} Hz is not positive and finite")]
    InvalidSampleRate(f64),
    #[error("sample {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("calibration level {0} is not finite")]
    InvalidCalibration(f64),
    #[error("waveform has no samples")]
    EmptySignal,
    #[error("sample rate {sample_rate} Hz too low for the weighting passband (need >= {required} Hz)")]
    SampleRateTooLow { sample_rate: f64, required: f64 },
    #[error("step {0} s is not positive and finite")]
    InvalidStep(f64),
    #[error("series is empty")]
    EmptySeries,
    #[error("series value at {index} is not finite")]
    NonFiniteSeriesValue { index: usize },
    #[error("exceedance fraction {0} outside [0, 100]")]
    InvalidPercent(f64),
    #[error("slice [{start}, {end}) s outside the waveform (duration {duration} s)")]
    SliceOutOfRange { start: f64, end: f64, duration: f64 },
}

/// Time constant of the "fast" exponential detector, in seconds.
pub const FAST_TIME_CONSTANT: f64 = 0.125;

/// Levels are floored this far below the calibration level so silence stays
/// finite.
pub const SILENCE_FLOOR_DB: f64 = 120.0;

/// A calibrated mono signal. `calibration_db` is the SPL that a full-scale
/// (amplitude 1.0) sine would measure, which ties digital sample values to
/// sound pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: f64,
    calibration_db: f64,
}

impl Waveform {
    pub fn new(
        samples: Vec<f64>,
        sample_rate: f64,
        calibration_db: f64,
    ) -> Result<Self, AcousticsError> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(AcousticsError::InvalidSampleRate(sample_rate));
        }
        if !calibration_db.is_finite() {
            return Err(AcousticsError::InvalidCalibration(calibration_db));
        }
        if samples.is_empty() {
            return Err(AcousticsError::EmptySignal);
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AcousticsError::NonFiniteSample { index });
        }
        Ok(Waveform {
            samples,
            sample_rate,
            calibration_db,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn calibration_db(&self) -> f64 {
        self.calibration_db
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Amplitude-scaled copy (levels shift by `20·log10(factor)`).
    pub fn scaled(&self, factor: f64) -> Waveform {
        Waveform {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            sample_rate: self.sample_rate,
            calibration_db: self.calibration_db,
        }
    }

    /// Copy of the samples in `[start, end)` seconds.
    pub fn slice_seconds(&self, start: f64, end: f64) -> Result<Waveform, AcousticsError> {
        let out_of_range = || AcousticsError::SliceOutOfRange {
            start,
            end,
            duration: self.duration(),
        };
        if !(start.is_finite() && end.is_finite() && start >= 0.0 && end > start) {
            return Err(out_of_range());
        }
        let a = (start * self.sample_rate).round() as usize;
        let b = (end * self.sample_rate).round() as usize;
        if b > self.samples.len() || a >= b {
            return Err(out_of_range());
        }
        Ok(Waveform {
            samples: self.samples[a..b].to_vec(),
            sample_rate: self.sample_rate,
            calibration_db: self.calibration_db,
        })
    }

    fn mean_square(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }

    fn level_from_mean_square(&self, ms: f64) -> f64 {
        let floor = self.calibration_db - SILENCE_FLOOR_DB;
        if ms <= 0.0 {
            return floor;
        }
        // a full-scale sine has mean square 0.5, hence the factor 2
        (10.0 * (2.0 * ms).log10() + self.calibration_db).max(floor)
    }
}

/// Time weighting applied to a level series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeWeighting {
    Fast,
    None,
}

/// A sampled level-versus-time trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSeries {
    pub times: Vec<f64>,
    pub levels: Vec<f64>,
    pub weighting: Weighting,
    pub time_weighting: TimeWeighting,
}

impl LevelSeries {
    /// Relabel the frequency-weighting tag (the series itself is computed
    /// from whatever waveform was supplied).
    pub fn tagged(mut self, weighting: Weighting) -> Self {
        self.weighting = weighting;
        self
    }

    /// Two-column CSV: `t_seconds,level_db`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), std::io::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_seconds", "level_db"])?;
        for (t, l) in self.times.iter().zip(self.levels.iter()) {
            w.write_record([format!("{t}"), format!("{l}")])?;
        }
        w.flush()
    }
}

/// Summary metrics for one waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub laeq: f64,
    pub lceq: f64,
    pub n95: f64,
    pub laf_series: LevelSeries,
    pub duration: f64,
}

/// Equivalent continuous level of the waveform as given (apply a weighting
/// first for LAeq/LCeq). A full-scale sine reads exactly the calibration
/// level; silence reads the floor.
pub fn leq(w: &Waveform) -> f64 {
    w.level_from_mean_square(w.mean_square())
}

/// Exponentially time-weighted level series (125 ms "fast" detector on the
/// squared signal), sampled every `step` seconds. The detector starts at
/// rest, and each reported time marks the end of its step interval.
pub fn fast_level_series(w: &Waveform, step: f64) -> Result<LevelSeries, AcousticsError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(AcousticsError::InvalidStep(step));
    }
    let fs = w.sample_rate();
    let hop = (step * fs).round() as usize;
    if hop == 0 {
        return Err(AcousticsError::InvalidStep(step));
    }
    let alpha = (-1.0 / (fs * FAST_TIME_CONSTANT)).exp();
    let mut state = 0.0f64;
    let mut times = Vec::with_capacity(w.samples.len() / hop + 1);
    let mut levels = Vec::with_capacity(w.samples.len() / hop + 1);
    for (i, &s) in w.samples.iter().enumerate() {
        state = alpha * state + (1.0 - alpha) * s * s;
        if (i + 1) % hop == 0 {
            times.push((i + 1) as f64 / fs);
            levels.push(w.level_from_mean_square(state));
        }
    }
    if times.is_empty() {
        // signal shorter than one step: report its end point
        times.push(w.samples.len() as f64 / fs);
        levels.push(w.level_from_mean_square(state));
    }
    Ok(LevelSeries {
        times,
        levels,
        weighting: Weighting::Z,
        time_weighting: TimeWeighting::Fast,
    })
}

/// Value exceeded `q` percent of the time: the (100−q)-th percentile from
/// below, with linear interpolation between order statistics.
pub fn exceedance(series: &[f64], q: f64) -> Result<f64, AcousticsError> {
    if series.is_empty() {
        return Err(AcousticsError::EmptySeries);
    }
    if !(0.0..=100.0).contains(&q) || !q.is_finite() {
        return Err(AcousticsError::InvalidPercent(q));
    }
    if let Some(index) = series.iter().position(|v| !v.is_finite()) {
        return Err(AcousticsError::NonFiniteSeriesValue { index });
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let h = (sorted.len() - 1) as f64 * (100.0 - q) / 100.0;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < sorted.len() {
        Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
    } else {
        Ok(sorted[lo])
    }
}

/// Level of the incoherent sum of sources: `10·log10(Σ 10^(L/10))`.
pub fn energetic_combine(levels: &[f64]) -> Result<f64, AcousticsError> {
    if levels.is_empty() {
        return Err(AcousticsError::EmptySeries);
    }
    Ok(10.0 * levels.iter().map(|l| 10f64.powf(l / 10.0)).sum::<f64>().log10())
}

/// Energetic average: `10·log10(mean(10^(L/10)))`.
pub fn energetic_mean(levels: &[f64]) -> Result<f64, AcousticsError> {
    let combined = energetic_combine(levels)?;
    Ok(combined - 10.0 * (levels.len() as f64).log10())
}

/// Options for [`metrics_report`].
pub struct MetricsOptions<'a> {
    /// Sampling step of the LAF series, seconds.
    pub laf_step: f64,
    /// Loudness backend; `None` uses the power-law mapping on 100 ms frames.
    pub loudness: Option<&'a dyn LoudnessBackend>,
}

impl Default for MetricsOptions<'_> {
    fn default() -> Self {
        MetricsOptions {
            laf_step: 0.1,
            loudness: None,
        }
    }
}

/// Computes LAeq, LCeq, the fast A-weighted level series and the loudness
/// level exceeded 95 % of the time.
pub fn metrics_report(w: &Waveform, opts: &MetricsOptions) -> Result<MetricsReport, AcousticsError> {
    let a_weighted = apply_weighting(w, Weighting::A)?;
    let c_weighted = apply_weighting(w, Weighting::C)?;
    let laeq = leq(&a_weighted);
    let lceq = leq(&c_weighted);
    let laf_series = fast_level_series(&a_weighted, opts.laf_step)?.tagged(Weighting::A);
    let sones = match opts.loudness {
        Some(backend) => backend.loudness_series(w)?,
        None => {
            let frames = fast_level_series(&a_weighted, PowerLawLoudness::DEFAULT_FRAME)?;
            frames.levels.iter().map(|&l| PowerLawLoudness::sones_from_level(l)).collect()
        }
    };
    let n95 = exceedance(&sones, 95.0)?;
    Ok(MetricsReport {
        laeq,
        lceq,
        n95,
        laf_series,
        duration: w.duration(),
    })
}

/// Picks the channel with the highest LAeq (ties go to the lower index).
/// Returns the index and the chosen channel as a waveform.
pub fn representative_channel(
    channels: &[Vec<f64>],
    sample_rate: f64,
    calibration_db: f64,
) -> Result<(usize, Waveform), AcousticsError> {
    if channels.is_empty() {
        return Err(AcousticsError::EmptySignal);
    }
    let mut best: Option<(usize, f64, Waveform)> = None;
    for (i, ch) in channels.iter().enumerate() {
        let w = Waveform::new(ch.clone(), sample_rate, calibration_db)?;
        let level = leq(&apply_weighting(&w, Weighting::A)?);
        let better = match &best {
            Some((_, b, _)) => level > *b,
            None => true,
        };
        if better {
            best = Some((i, level, w));
        }
    }
    let (i, _, w) = best.expect("non-empty channels");
    Ok((i, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sine(freq: f64, fs: f64, seconds: f64, amplitude: f64) -> Waveform {
        let n = (fs * seconds) as usize;
        let samples = (0..n)
            .map(|i| amplitude * (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin())
            .collect();
        Waveform::new(samples, fs, 94.0).unwrap()
    }

    #[test]
    fn full_scale_sine_reads_calibration_level() {
        let w = sine(1000.0, 48_000.0, 1.0, 1.0);
        assert_abs_diff_eq!(leq(&w), 94.0, epsilon = 0.01);
    }

    #[test]
    fn half_amplitude_sine_reads_six_db_down() {
        let w = sine(1000.0, 48_000.0, 1.0, 0.5);
        assert_abs_diff_eq!(leq(&w), 94.0 + 20.0 * 0.5f64.log10(), epsilon = 0.01);
    }

    #[test]
    fn silence_reads_the_floor() {
        let w = Waveform::new(vec![0.0; 1000], 48_000.0, 94.0).unwrap();
        assert_eq!(leq(&w), 94.0 - SILENCE_FLOOR_DB);
    }

    #[test]
    fn scaling_shifts_levels_exactly() {
        let w = sine(250.0, 48_000.0, 0.5, 0.3);
        let k = 0.123;
        let scaled = w.scaled(k);
        assert_abs_diff_eq!(leq(&scaled) - leq(&w), 20.0 * k.log10(), epsilon = 1e-9);
        let a = fast_level_series(&w, 0.1).unwrap();
        let b = fast_level_series(&scaled, 0.1).unwrap();
        for (x, y) in a.levels.iter().zip(b.levels.iter()) {
            assert_abs_diff_eq!(y - x, 20.0 * k.log10(), epsilon = 1e-9);
        }
    }

    #[test]
    fn concatenation_matches_energetic_mean() {
        let a = sine(500.0, 32_000.0, 1.0, 0.8);
        let b = sine(500.0, 32_000.0, 1.0, 0.2);
        let mut joined = a.samples().to_vec();
        joined.extend_from_slice(b.samples());
        let joined = Waveform::new(joined, 32_000.0, 94.0).unwrap();
        let expected = energetic_mean(&[leq(&a), leq(&b)]).unwrap();
        assert_abs_diff_eq!(leq(&joined), expected, epsilon = 0.01);
    }

    #[test]
    fn fast_series_settles_to_leq() {
        let w = sine(1000.0, 48_000.0, 3.0, 0.5);
        let series = fast_level_series(&w, 0.1).unwrap();
        let target = leq(&w);
        for (t, l) in series.times.iter().zip(series.levels.iter()) {
            if *t >= 1.0 {
                assert_abs_diff_eq!(*l, target, epsilon = 0.1);
            }
        }
        assert_eq!(series.time_weighting, TimeWeighting::Fast);
    }

    #[test]
    fn fast_series_rises_monotonically_on_step_input() {
        let mut samples = vec![0.0; 4800];
        samples.extend(vec![0.7; 48_000]);
        let w = Waveform::new(samples, 48_000.0, 94.0).unwrap();
        let series = fast_level_series(&w, 0.05).unwrap();
        for pair in series.levels.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "overshoot: {pair:?}");
        }
    }

    #[test]
    fn fast_series_times_strictly_increase() {
        let w = sine(100.0, 16_000.0, 0.5, 0.1);
        let series = fast_level_series(&w, 0.07).unwrap();
        assert!(series.times.windows(2).all(|p| p[1] > p[0]));
        assert_eq!(series.times.len(), series.levels.len());
    }

    #[test]
    fn exceedance_order_statistics() {
        let series: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_abs_diff_eq!(exceedance(&series, 95.0).unwrap(), 5.95, epsilon = 1e-12);
        assert_abs_diff_eq!(exceedance(&series, 50.0).unwrap(), 50.5, epsilon = 1e-12);
        assert_eq!(exceedance(&series, 0.0).unwrap(), 100.0);
        assert_eq!(exceedance(&series, 100.0).unwrap(), 1.0);
        assert_eq!(exceedance(&[7.25; 10], 23.0).unwrap(), 7.25);
    }

    #[test]
    fn exceedance_is_monotone_in_q() {
        let series = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let mut last = f64::INFINITY;
        for q in 0..=100 {
            let v = exceedance(&series, f64::from(q)).unwrap();
            assert!(v <= last + 1e-12);
            last = v;
        }
    }

    #[test]
    fn exceedance_rejects_bad_input() {
        assert!(matches!(exceedance(&[], 50.0), Err(AcousticsError::EmptySeries)));
        assert!(matches!(
            exceedance(&[1.0], 101.0),
            Err(AcousticsError::InvalidPercent(_))
        ));
        assert!(matches!(
            exceedance(&[1.0, f64::NAN], 50.0),
            Err(AcousticsError::NonFiniteSeriesValue { index: 1 })
        ));
    }

    #[test]
    fn energetic_combine_examples() {
        assert_abs_diff_eq!(energetic_combine(&[64.0, 64.0]).unwrap(), 67.01, epsilon = 0.005);
        assert_abs_diff_eq!(
            energetic_combine(&[60.0, 60.0, 60.0, 60.0]).unwrap(),
            66.02,
            epsilon = 0.005
        );
        assert_eq!(energetic_combine(&[55.5]).unwrap(), 55.5);
        assert_abs_diff_eq!(energetic_mean(&[64.0, 64.0]).unwrap(), 64.0, epsilon = 1e-12);
    }

    #[test]
    fn report_fields_are_consistent() {
        let w = sine(1000.0, 32_000.0, 2.0, 0.25);
        let report = metrics_report(&w, &MetricsOptions::default()).unwrap();
        assert_abs_diff_eq!(report.duration, 2.0, epsilon = 1e-9);
        assert_eq!(report.laf_series.weighting, Weighting::A);
        let max_laf = report
            .laf_series
            .levels
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(report.laeq <= max_laf + 0.5);
        assert!(report.n95 >= 0.0);
        // 1 kHz sine: A and C weighting both leave it at the unweighted level
        assert_abs_diff_eq!(report.laeq, leq(&w), epsilon = 0.05);
        assert_abs_diff_eq!(report.lceq, leq(&w), epsilon = 0.05);
    }

    #[test]
    fn n95_stable_under_time_reversal() {
        // stationary noise-like input built from incommensurate tones
        let fs = 32_000.0;
        let n = 32_000 * 3;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                0.2 * (2.0 * std::f64::consts::PI * 431.7 * t).sin()
                    + 0.15 * (2.0 * std::f64::consts::PI * 977.3 * t).sin()
                    + 0.1 * (2.0 * std::f64::consts::PI * 1531.1 * t).sin()
            })
            .collect();
        let w = Waveform::new(samples.clone(), fs, 94.0).unwrap();
        let mut rev = samples;
        rev.reverse();
        let wr = Waveform::new(rev, fs, 94.0).unwrap();
        let opts = MetricsOptions::default();
        let a = metrics_report(&w, &opts).unwrap();
        let b = metrics_report(&wr, &opts).unwrap();
        let ratio = a.n95 / b.n95;
        assert!(ratio > 0.98 && ratio < 1.02, "n95 {} vs {}", a.n95, b.n95);
    }

    #[test]
    fn representative_channel_picks_louder_one() {
        let quiet = sine(1000.0, 32_000.0, 0.5, 0.1);
        let loud = sine(1000.0, 32_000.0, 0.5, 0.4);
        let (idx, w) = representative_channel(
            &[quiet.samples().to_vec(), loud.samples().to_vec()],
            32_000.0,
            94.0,
        )
        .unwrap();
        assert_eq!(idx, 1);
        assert_eq!(w.samples(), loud.samples());
    }

    #[test]
    fn waveform_validation() {
        assert!(matches!(
            Waveform::new(vec![0.0], 0.0, 94.0),
            Err(AcousticsError::InvalidSampleRate(_))
        ));
        assert!(matches!(
            Waveform::new(vec![0.0, f64::INFINITY], 48_000.0, 94.0),
            Err(AcousticsError::NonFiniteSample { index: 1 })
        ));
        assert!(matches!(
            Waveform::new(vec![], 48_000.0, 94.0),
            Err(AcousticsError::EmptySignal)
        ));
        assert!(matches!(
            Waveform::new(vec![0.0], 48_000.0, f64::NAN),
            Err(AcousticsError::InvalidCalibration(_))
        ));
    }

    #[test]
    fn slice_seconds_extracts_windows() {
        let w = sine(100.0, 1000.0, 2.0, 0.5);
        let s = w.slice_seconds(0.5, 1.5).unwrap();
        assert_eq!(s.samples().len(), 1000);
        assert_eq!(s.samples()[0], w.samples()[500]);
        assert!(w.slice_seconds(1.5, 2.5).is_err());
        assert!(w.slice_seconds(1.0, 1.0).is_err());
    }
}

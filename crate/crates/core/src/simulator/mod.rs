//! Offline rendering of a session log over an ambient recording.
//!
//! The simulator is the audit trail for a session: given the ambient audio
//! and the log the engine produced, it reconstructs exactly what a listener
//! at the layout's reference point would have heard. Each logged interval
//! contributes its masker, amplitude-matched so the masker's own A-weighted
//! level at the listener equals the logged `achieved_spl` (recomputed from
//! gain and calibration when the log omits it).
//!
//! Consecutive intervals that keep the same masker at the same gain play as
//! one uninterrupted run. Where the state changes, the outgoing and incoming
//! maskers crossfade with equal-power ramps centred on the boundary; a
//! change to or from silence fades one-sided. Intervals with the masker off
//! (including failed ones) leave the ambient untouched, so an all-off log
//! reproduces the ambient bit for bit.

mod resample;

pub use resample::resample;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acoustics::{
    apply_weighting, leq, metrics_report, AcousticsError, MetricsOptions, MetricsReport,
    Waveform, Weighting,
};
use crate::bank::{listener_spl, BankError, MaskerBank, SpeakerLayout};
use crate::engine::SessionLog;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("sample rate {0} Hz is not positive and finite")]
    InvalidRate(f64),
    #[error("masker '{0}' is not in the bank")]
    MissingMasker(String),
    #[error("ambient covers {ambient:.2} s but the log needs {needed:.2} s")]
    AmbientTooShort { ambient: f64, needed: f64 },
    #[error("log entry {position} has interval_index {found}, expected {expected}")]
    UnorderedEntries {
        position: usize,
        found: usize,
        expected: usize,
    },
    #[error("crossfade {got} s must lie in [0, interval {interval} s]")]
    BadCrossfade { got: f64, interval: f64 },
    #[error(transparent)]
    Acoustics(#[from] AcousticsError),
    #[error(transparent)]
    Bank(#[from] BankError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixOptions {
    /// Equal-power crossfade span at state changes, seconds. Zero switches
    /// hard on the boundary sample.
    pub crossfade: f64,
}

impl Default for MixOptions {
    fn default() -> Self {
        MixOptions { crossfade: 0.5 }
    }
}

/// One stretch of intervals with an unchanged (masker, gain) state.
struct Run {
    first_interval: usize,
    last_interval: usize,
    masker_id: String,
    digital_gain: f64,
    target_spl: f64,
}

/// Renders the augmented waveform: ambient plus the logged maskers. The
/// output has exactly the ambient's length, rate and calibration; audio
/// past the log's coverage (and under masker-off intervals) is the ambient
/// unchanged.
pub fn mix_session(
    ambient: &Waveform,
    log: &SessionLog,
    bank: &MaskerBank,
    layout: &SpeakerLayout,
    opts: &MixOptions,
) -> Result<Waveform, SimError> {
    let interval = log.policy.interval;
    let crossfade = opts.crossfade;
    if !(crossfade.is_finite() && (0.0..=interval).contains(&crossfade)) {
        return Err(SimError::BadCrossfade {
            got: crossfade,
            interval,
        });
    }
    for (position, entry) in log.entries.iter().enumerate() {
        if entry.interval_index != position {
            return Err(SimError::UnorderedEntries {
                position,
                found: entry.interval_index,
                expected: position,
            });
        }
    }
    let coverage = log.coverage();
    if ambient.duration() + 1e-9 < coverage {
        return Err(SimError::AmbientTooShort {
            ambient: ambient.duration(),
            needed: coverage,
        });
    }

    // Merge consecutive identical states into runs.
    let mut runs: Vec<Run> = Vec::new();
    for entry in &log.entries {
        if !entry.masker_on() {
            continue;
        }
        let id = entry.masker_id.as_ref().expect("masker_on");
        let target_spl = match entry.achieved_spl {
            Some(spl) => spl,
            None => {
                let table = bank.calibration(id)?;
                listener_spl(table.spl_of_gain(entry.digital_gain), layout)
            }
        };
        match runs.last_mut() {
            Some(run)
                if run.last_interval + 1 == entry.interval_index
                    && run.masker_id == *id
                    && run.digital_gain == entry.digital_gain =>
            {
                run.last_interval = entry.interval_index;
            }
            _ => runs.push(Run {
                first_interval: entry.interval_index,
                last_interval: entry.interval_index,
                masker_id: id.clone(),
                digital_gain: entry.digital_gain,
                target_spl,
            }),
        }
    }

    let fs = ambient.sample_rate();
    let mut out = ambient.samples().to_vec();
    // unit-gain masker samples on the ambient clock, with their A-weighted
    // level under the ambient calibration
    let mut cache: HashMap<String, (Vec<f64>, f64)> = HashMap::new();
    let half_fade = ((crossfade / 2.0) * fs).round() as usize;

    for run in &runs {
        if !cache.contains_key(&run.masker_id) {
            let entry = bank
                .get(&run.masker_id)
                .ok_or_else(|| SimError::MissingMasker(run.masker_id.clone()))?;
            let audio = &entry.track.audio;
            let samples = resample(audio.samples(), audio.sample_rate(), fs)?;
            let on_clock = Waveform::new(samples, fs, ambient.calibration_db())?;
            let unit_level = leq(&apply_weighting(&on_clock, Weighting::A)?);
            cache.insert(
                run.masker_id.clone(),
                (on_clock.samples().to_vec(), unit_level),
            );
        }
        let (samples, unit_level) = &cache[&run.masker_id];
        let scale = 10f64.powf((run.target_spl - unit_level) / 20.0);
        let loop_len = samples.len() as isize;

        let a = ((run.first_interval as f64 * interval) * fs).round() as usize;
        let b = (((run.last_interval + 1) as f64 * interval) * fs).round() as usize;
        let b = b.min(out.len());
        // crossfades happen only at boundaries between intervals, so runs
        // touching the session edges start/stop hard there
        let fade_in = run.first_interval > 0;
        let fade_out = run.last_interval + 1 < log.entries.len();
        let span_start = if fade_in { a - half_fade.min(a) } else { a };
        let span_end = if fade_out {
            (b + half_fade).min(out.len())
        } else {
            b
        };

        for t in span_start..span_end {
            let pos = (t as isize - a as isize).rem_euclid(loop_len) as usize;
            let mut envelope = 1.0;
            if fade_in && half_fade > 0 && t < a + half_fade {
                let x = (t + half_fade - a) as f64 / (2 * half_fade) as f64;
                envelope *= (x * std::f64::consts::FRAC_PI_2).sin();
            }
            if fade_out && half_fade > 0 && t + half_fade >= b {
                let x = (t + half_fade - b) as f64 / (2 * half_fade) as f64;
                envelope *= (x * std::f64::consts::FRAC_PI_2).cos();
            }
            out[t] += scale * envelope * samples[pos];
        }
    }

    Ok(Waveform::new(out, fs, ambient.calibration_db())?)
}

/// Metrics for the ambient and augmented renderings of one session, plus
/// the headline differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub ambient: MetricsReport,
    pub augmented: MetricsReport,
    pub delta_laeq: f64,
    pub delta_lceq: f64,
    pub delta_n95: f64,
}

pub fn session_report(
    ambient: &Waveform,
    augmented: &Waveform,
    opts: &MetricsOptions,
) -> Result<SessionReport, AcousticsError> {
    let amb = metrics_report(ambient, opts)?;
    let aug = metrics_report(augmented, opts)?;
    Ok(SessionReport {
        delta_laeq: aug.laeq - amb.laeq,
        delta_lceq: aug.lceq - amb.lceq,
        delta_n95: aug.n95 - amb.n95,
        ambient: amb,
        augmented: aug,
    })
}

//! Adaptive soundscape augmentation toolkit.
//!
//! The crate covers the full loop of an in-situ soundscape augmentation
//! system and its evaluation:
//!
//! * [`perception`] — circumplex indices and normalized scores derived from
//!   listener questionnaires.
//! * [`acoustics`] — frequency-weighted levels, time-weighted level series,
//!   exceedance statistics and psychoacoustic summaries.
//! * [`bank`] — masker tracks, per-masker gain calibration and speaker
//!   layout geometry.
//! * [`predictor`] — pluggable predictors that score candidate
//!   augmentations by expected pleasantness, plus candidate ranking.
//! * [`engine`] — the interval scheduler that turns ambient audio and a
//!   masker bank into a reproducible selection log.
//! * [`simulator`] — offline rendering of a selection log into an
//!   augmented waveform and before/after metric reports.
//! * [`analysis`] — listening-test statistics: two-sample tests, multiple
//!   comparison corrections, rank correlation and site/condition contrasts.
//! * [`service`] — an HTTP inference service speaking the same wire
//!   protocol as the remote predictor client.
//! * [`audio`] — WAV decoding/encoding helpers.
//! * [`config`] — TOML-backed run configuration used by the CLI.

/// Default SPL assigned to a full-scale sine when no measurement is
/// available (the usual 94 dB / 1 Pa convention).
pub const DEFAULT_CALIBRATION_DB: f64 = 94.0;

pub mod acoustics;
pub mod analysis;
pub mod audio;
pub mod bank;
pub mod config;
pub mod engine;
pub mod perception;
pub mod predictor;
pub mod service;
pub mod simulator;

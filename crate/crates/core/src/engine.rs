//! The augmentation control loop.
//!
//! Every interval, the engine samples a handful of gains per eligible
//! masker from a log-normal distribution, asks the predictor to score the
//! resulting candidates against the previous interval's ambient audio,
//! and logs the top-ranked pick together with the level it should reach at
//! the listener. The log is the single source of truth: rendering
//! (simulator) and analysis both replay it.
//!
//! There is no wall-clock anywhere; given the same bank, policy (including
//! seed), predictor and ambient audio, a session log is bit-identical.

use std::io::{self, BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acoustics::{AcousticsError, Waveform};
use crate::bank::{listener_spl, BankError, MaskerBank, MaskerClass, SpeakerLayout};
use crate::predictor::{
    rank_candidates, AmbientFeatures, BackendTag, CandidateAugmentation, FeatureOptions,
    IsoplPredictor, PredictError, RankCriterion,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("selection policy invalid: {0}")]
    Policy(String),
    #[error("no eligible maskers in the bank after applying filters")]
    NoEligibleMaskers,
    #[error("ambient window is {got:.3} s, expected the policy interval {want:.3} s")]
    WindowMismatch { got: f64, want: f64 },
    #[error("ambient recording covers {ambient:.2} s but the session needs {needed:.2} s")]
    AmbientTooShort { ambient: f64, needed: f64 },
    #[error("session log line {line}: {message}")]
    LogFormat { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Bank(#[from] BankError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Acoustics(#[from] AcousticsError),
}

/// Tunable knobs of the selection loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionPolicy {
    /// Selection interval, seconds.
    pub interval: f64,
    /// Gain draws per eligible masker per interval.
    pub gains_per_masker: usize,
    /// Mean of ln(gain).
    pub log_gain_mean: f64,
    /// Standard deviation of ln(gain).
    pub log_gain_std: f64,
    /// Class allowlist; `None` admits every class.
    pub classes: Option<Vec<MaskerClass>>,
    /// Masker id allowlist; `None` admits every id.
    pub ids: Option<Vec<String>>,
    pub rng_seed: u64,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        SelectionPolicy {
            interval: 30.0,
            gains_per_masker: 5,
            log_gain_mean: -2.0,
            log_gain_std: 1.5,
            classes: None,
            ids: None,
            rng_seed: 0,
        }
    }
}

impl SelectionPolicy {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.interval.is_finite() && self.interval > 0.0) {
            return Err(EngineError::Policy(format!(
                "interval {} must be positive",
                self.interval
            )));
        }
        if self.gains_per_masker < 1 {
            return Err(EngineError::Policy("gains_per_masker must be >= 1".into()));
        }
        if !self.log_gain_mean.is_finite() {
            return Err(EngineError::Policy(format!(
                "log_gain_mean {} not finite",
                self.log_gain_mean
            )));
        }
        if !(self.log_gain_std.is_finite() && self.log_gain_std >= 0.0) {
            return Err(EngineError::Policy(format!(
                "log_gain_std {} must be >= 0",
                self.log_gain_std
            )));
        }
        Ok(())
    }

    fn admits(&self, id: &str, class: MaskerClass) -> bool {
        let class_ok = self.classes.as_ref().is_none_or(|cs| cs.contains(&class));
        let id_ok = self.ids.as_ref().is_none_or(|ids| ids.iter().any(|i| i == id));
        class_ok && id_ok
    }
}

/// i.i.d. gains `g = exp(z)`, `z ~ Normal(log_gain_mean, log_gain_std)`.
pub fn sample_gains(policy: &SelectionPolicy, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if policy.log_gain_std == 0.0 {
        return vec![policy.log_gain_mean.exp(); policy.gains_per_masker];
    }
    let normal =
        Normal::new(policy.log_gain_mean, policy.log_gain_std).expect("validated policy");
    (0..policy.gains_per_masker)
        .map(|_| normal.sample(rng).exp())
        .collect()
}

/// One interval's outcome. A failed interval keeps the masker off
/// (`masker_id = None`, gain 0) and carries the failure in `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionLogEntry {
    pub interval_index: usize,
    /// Start of the playback interval this entry governs, seconds.
    pub window_start: f64,
    pub masker_id: Option<String>,
    pub digital_gain: f64,
    pub predicted_mean: Option<f64>,
    pub predicted_std: Option<f64>,
    pub baseline_mean: Option<f64>,
    pub baseline_std: Option<f64>,
    pub backend: Option<BackendTag>,
    /// Masker SPL at the listener implied by the calibration chain, dBA.
    pub achieved_spl: Option<f64>,
    pub error: Option<String>,
}

impl SelectionLogEntry {
    pub fn masker_on(&self) -> bool {
        self.masker_id.is_some() && self.digital_gain > 0.0
    }

    fn failed(interval_index: usize, window_start: f64, error: String) -> Self {
        SelectionLogEntry {
            interval_index,
            window_start,
            masker_id: None,
            digital_gain: 0.0,
            predicted_mean: None,
            predicted_std: None,
            baseline_mean: None,
            baseline_std: None,
            backend: None,
            achieved_spl: None,
            error: Some(error),
        }
    }
}

/// Session identity carried into the log header.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: String,
    pub site: Option<String>,
    pub condition: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LogHeader {
    session_id: String,
    site: Option<String>,
    condition: Option<String>,
    policy: SelectionPolicy,
}

/// A complete session: metadata, the policy that produced it, and one
/// entry per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub meta: SessionMeta,
    pub policy: SelectionPolicy,
    pub entries: Vec<SelectionLogEntry>,
}

impl SessionLog {
    /// Seconds of ambient audio the log covers.
    pub fn coverage(&self) -> f64 {
        self.entries.len() as f64 * self.policy.interval
    }

    /// JSON-lines: one header line, then one line per entry.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        let header = LogHeader {
            session_id: self.meta.session_id.clone(),
            site: self.meta.site.clone(),
            condition: self.meta.condition.clone(),
            policy: self.policy.clone(),
        };
        writeln!(out, "{}", serde_json::to_string(&header)?)?;
        for entry in &self.entries {
            writeln!(out, "{}", serde_json::to_string(entry)?)?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<SessionLog, EngineError> {
        let mut lines = reader.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| EngineError::LogFormat {
                line: 1,
                message: "empty file".into(),
            })??;
        let header: LogHeader =
            serde_json::from_str(&header_line).map_err(|e| EngineError::LogFormat {
                line: 1,
                message: e.to_string(),
            })?;
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: SelectionLogEntry =
                serde_json::from_str(&line).map_err(|e| EngineError::LogFormat {
                    line: i + 2,
                    message: e.to_string(),
                })?;
            entries.push(entry);
        }
        Ok(SessionLog {
            meta: SessionMeta {
                session_id: header.session_id,
                site: header.site,
                condition: header.condition,
            },
            policy: header.policy,
            entries,
        })
    }
}

/// How often each masker was chosen, as a percentage of all intervals with
/// a masker on, across the supplied logs.
pub fn selection_frequency_report(
    logs: &[SessionLog],
) -> std::collections::BTreeMap<String, f64> {
    let mut counts: std::collections::BTreeMap<String, usize> = Default::default();
    let mut total = 0usize;
    for log in logs {
        for entry in &log.entries {
            if let Some(id) = entry.masker_id.as_ref().filter(|_| entry.masker_on()) {
                *counts.entry(id.clone()).or_default() += 1;
                total += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|(id, n)| (id, 100.0 * n as f64 / total as f64))
        .collect()
}

/// The selection loop bound to a bank, layout and predictor.
pub struct Engine<'a> {
    bank: &'a MaskerBank,
    layout: &'a SpeakerLayout,
    policy: SelectionPolicy,
    predictor: &'a dyn IsoplPredictor,
    criterion: RankCriterion,
    feature_options: FeatureOptions,
}

impl<'a> Engine<'a> {
    pub fn new(
        bank: &'a MaskerBank,
        layout: &'a SpeakerLayout,
        policy: SelectionPolicy,
        predictor: &'a dyn IsoplPredictor,
    ) -> Result<Self, EngineError> {
        policy.validate()?;
        Ok(Engine {
            bank,
            layout,
            policy,
            predictor,
            criterion: RankCriterion::default(),
            feature_options: FeatureOptions::default(),
        })
    }

    pub fn with_criterion(mut self, criterion: RankCriterion) -> Self {
        self.criterion = criterion;
        self
    }

    pub fn with_feature_options(mut self, opts: FeatureOptions) -> Self {
        self.feature_options = opts;
        self
    }

    pub fn policy(&self) -> &SelectionPolicy {
        &self.policy
    }

    fn eligible(&self) -> Result<Vec<(&String, MaskerClass)>, EngineError> {
        let set: Vec<_> = self
            .bank
            .selectable()
            .filter(|e| self.policy.admits(&e.track.id, e.track.class))
            .map(|e| (&e.track.id, e.track.class))
            .collect();
        if set.is_empty() {
            return Err(EngineError::NoEligibleMaskers);
        }
        Ok(set)
    }

    /// Runs one interval against the given ambient window (normally the
    /// previous interval's audio). Gains are drawn from `rng` in eligible-id
    /// order, `gains_per_masker` per masker, before prediction; a predictor
    /// failure therefore cannot desynchronize the stream, and the interval
    /// is logged as failed (masker off) while the session continues.
    pub fn run_interval(
        &self,
        ambient_window: &Waveform,
        interval_index: usize,
        window_start: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<SelectionLogEntry, EngineError> {
        let got = ambient_window.duration();
        let want = self.policy.interval;
        if (got - want).abs() > 1.5 / ambient_window.sample_rate() {
            return Err(EngineError::WindowMismatch { got, want });
        }
        let eligible = self.eligible()?;

        let features = AmbientFeatures::extract(ambient_window, &self.feature_options)?;
        let ambient_laeq = features.laeq();

        let mut candidates = Vec::with_capacity(eligible.len() * self.policy.gains_per_masker);
        let mut listener_levels = Vec::with_capacity(candidates.capacity());
        for (id, class) in &eligible {
            let table = self.bank.calibration(id)?;
            for gain in sample_gains(&self.policy, rng) {
                let spl_1m = table.spl_of_gain(gain);
                let at_listener = listener_spl(spl_1m, self.layout);
                let candidate = CandidateAugmentation::new(
                    (*id).clone(),
                    *class,
                    gain,
                    at_listener - ambient_laeq,
                )
                .map_err(EngineError::Predict)?;
                candidates.push(candidate);
                listener_levels.push(at_listener);
            }
        }

        let fail = |message: String| {
            Ok(SelectionLogEntry::failed(
                interval_index,
                window_start,
                message,
            ))
        };
        let prediction = match self.predictor.predict(&features, &candidates) {
            Ok(p) => p,
            Err(e) => return fail(format!("predictor: {e}")),
        };
        let order = match rank_candidates(
            &candidates,
            &prediction.candidates,
            prediction.baseline,
            self.criterion,
        ) {
            Ok(o) => o,
            Err(e) => return fail(format!("ranking: {e}")),
        };

        let best = order[0];
        let chosen = &candidates[best];
        Ok(SelectionLogEntry {
            interval_index,
            window_start,
            masker_id: Some(chosen.masker_id.clone()),
            digital_gain: chosen.digital_gain,
            predicted_mean: Some(prediction.candidates[best].mean),
            predicted_std: Some(prediction.candidates[best].std),
            baseline_mean: Some(prediction.baseline.mean),
            baseline_std: Some(prediction.baseline.std),
            backend: Some(prediction.backend),
            achieved_spl: Some(listener_levels[best]),
            error: None,
        })
    }

    /// Runs `⌊duration/interval⌋` intervals. Interval k > 0 selects against
    /// the audio of interval k−1; interval 0 bootstraps from its own
    /// window. Partial trailing audio is dropped.
    pub fn run_session(
        &self,
        ambient: &Waveform,
        duration: f64,
        meta: SessionMeta,
    ) -> Result<SessionLog, EngineError> {
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(EngineError::Policy(format!("bad session duration {duration}")));
        }
        let interval = self.policy.interval;
        let count = (duration / interval + 1e-9).floor() as usize;
        let needed = count as f64 * interval;
        if ambient.duration() + 1e-9 < needed {
            return Err(EngineError::AmbientTooShort {
                ambient: ambient.duration(),
                needed,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.policy.rng_seed);
        let mut entries = Vec::with_capacity(count);
        for k in 0..count {
            let feature_window = if k == 0 { 0 } else { k - 1 };
            let start = feature_window as f64 * interval;
            let window = ambient.slice_seconds(start, start + interval)?;
            entries.push(self.run_interval(&window, k, k as f64 * interval, &mut rng)?);
        }
        Ok(SessionLog {
            meta,
            policy: self.policy.clone(),
            entries,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank::{BankEntry, CalibrationPoint, CalibrationTable, MaskerTrack};
    use crate::predictor::{SurrogateConfig, SurrogatePredictor};
    use approx::assert_abs_diff_eq;

    fn track(id: &str, class: MaskerClass) -> MaskerTrack {
        let audio = Waveform::new(vec![0.05; 30 * 8000], 8000.0, 94.0).unwrap();
        MaskerTrack::new(id.into(), class, audio).unwrap()
    }

    /// E ∝ g² table, gain 1.0 ↔ 65 dBA@1 m, covering 40–90 dBA.
    fn wide_table(id: &str) -> CalibrationTable {
        let points = (0..26)
            .map(|i| {
                let spl = 40.0 + 2.0 * i as f64;
                CalibrationPoint {
                    digital_gain: 10f64.powf((spl - 65.0) / 20.0),
                    spl_dba_1m: spl,
                }
            })
            .collect();
        CalibrationTable::new(id.into(), points).unwrap()
    }

    fn entry(id: &str, class: MaskerClass) -> BankEntry {
        BankEntry {
            track: track(id, class),
            calibration: Some(wide_table(id)),
        }
    }

    fn test_bank() -> MaskerBank {
        MaskerBank::new(vec![
            entry("bird_a", MaskerClass::Bird),
            entry("traffic_z", MaskerClass::Traffic),
        ])
        .unwrap()
    }

    fn ambient(seconds: f64) -> Waveform {
        let fs = 16_000.0;
        let n = (seconds * fs) as usize;
        let samples = (0..n)
            .map(|i| 0.02 * (2.0 * std::f64::consts::PI * 350.0 * i as f64 / fs).sin())
            .collect();
        Waveform::new(samples, fs, 94.0).unwrap()
    }

    fn short_policy(seed: u64) -> SelectionPolicy {
        SelectionPolicy {
            interval: 1.0,
            rng_seed: seed,
            ..SelectionPolicy::default()
        }
    }

    #[test]
    fn degenerate_log_normal_collapses_to_point() {
        let policy = SelectionPolicy {
            log_gain_std: 0.0,
            ..SelectionPolicy::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let gains = sample_gains(&policy, &mut rng);
        assert_eq!(gains.len(), 5);
        for g in gains {
            assert_abs_diff_eq!(g, (-2.0f64).exp(), epsilon = 1e-15);
        }
    }

    #[test]
    fn sampled_log_gains_match_policy_moments() {
        let policy = SelectionPolicy {
            gains_per_masker: 100_000,
            ..SelectionPolicy::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let gains = sample_gains(&policy, &mut rng);
        let logs: Vec<f64> = gains.iter().map(|g| g.ln()).collect();
        let mean = logs.iter().sum::<f64>() / logs.len() as f64;
        let var = logs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (logs.len() - 1) as f64;
        assert_abs_diff_eq!(mean, -2.0, epsilon = 0.02);
        assert_abs_diff_eq!(var.sqrt(), 1.5, epsilon = 0.02);
        assert!(gains.iter().all(|&g| g > 0.0));
    }

    #[test]
    fn single_candidate_is_selected() {
        let bank = MaskerBank::new(vec![entry("only_one", MaskerClass::Water)]).unwrap();
        let layout = SpeakerLayout::default();
        let surrogate = SurrogatePredictor::new(SurrogateConfig::default()).unwrap();
        let policy = SelectionPolicy {
            interval: 1.0,
            gains_per_masker: 1,
            ..SelectionPolicy::default()
        };
        let engine = Engine::new(&bank, &layout, policy, &surrogate).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let entry = engine
            .run_interval(&ambient(1.0), 0, 0.0, &mut rng)
            .unwrap();
        assert_eq!(entry.masker_id.as_deref(), Some("only_one"));
        assert!(entry.masker_on());
        assert!(entry.error.is_none());
        assert!(entry.achieved_spl.is_some());
    }

    #[test]
    fn natural_class_beats_traffic_at_equal_footing() {
        let bank = test_bank();
        let layout = SpeakerLayout::default();
        let surrogate = SurrogatePredictor::new(SurrogateConfig::default()).unwrap();
        let engine = Engine::new(&bank, &layout, short_policy(3), &surrogate).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let entry = engine
            .run_interval(&ambient(1.0), 0, 0.0, &mut rng)
            .unwrap();
        assert_eq!(entry.masker_id.as_deref(), Some("bird_a"));
    }

    #[test]
    fn session_entry_count_is_floor_of_duration_over_interval() {
        let bank = test_bank();
        let layout = SpeakerLayout::default();
        let surrogate = SurrogatePredictor::new(SurrogateConfig::default()).unwrap();
        let engine = Engine::new(&bank, &layout, short_policy(5), &surrogate).unwrap();
        let amb = ambient(5.5);
        let log = engine
            .run_session(&amb, 5.5, SessionMeta::default())
            .unwrap();
        assert_eq!(log.entries.len(), 5);
        let log1 = engine
            .run_session(&amb, 1.0, SessionMeta::default())
            .unwrap();
        assert_eq!(log1.entries.len(), 1);
        let log1b = engine
            .run_session(&amb, 1.5, SessionMeta::default())
            .unwrap();
        assert_eq!(log1b.entries.len(), 1);
    }

    #[test]
    fn sessions_with_same_seed_are_bit_identical() {
        let bank = test_bank();
        let layout = SpeakerLayout::default();
        let surrogate = SurrogatePredictor::new(SurrogateConfig::default()).unwrap();
        let engine = Engine::new(&bank, &layout, short_policy(11), &surrogate).unwrap();
        let amb = ambient(4.0);
        let meta = SessionMeta {
            session_id: "s1".into(),
            site: Some("RTGP".into()),
            condition: Some("AMSS".into()),
        };
        let a = engine.run_session(&amb, 4.0, meta.clone()).unwrap();
        let b = engine.run_session(&amb, 4.0, meta).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());

        let engine2 = Engine::new(&bank, &layout, short_policy(12), &surrogate).unwrap();
        let c = engine2
            .run_session(
                &amb,
                4.0,
                SessionMeta {
                    session_id: "s1".into(),
                    site: Some("RTGP".into()),
                    condition: Some("AMSS".into()),
                },
            )
            .unwrap();
        assert_ne!(a.to_jsonl(), c.to_jsonl(), "different seed, same log");
    }

    #[test]
    fn logged_gains_are_positive_and_ids_eligible() {
        let bank = test_bank();
        let layout = SpeakerLayout::default();
        let surrogate = SurrogatePredictor::new(SurrogateConfig::default()).unwrap();
        let engine = Engine::new(&bank, &layout, short_policy(17), &surrogate).unwrap();
        let log = engine
            .run_session(&ambient(6.0), 6.0, SessionMeta::default())
            .unwrap();
        for entry in &log.entries {
            assert!(entry.digital_gain > 0.0);
            let id = entry.masker_id.as_deref().unwrap();
            assert!(bank.get(id).is_some());
        }
    }

    #[test]
    fn class_filter_restricts_selection() {
        let bank = test_bank();
        let layout = SpeakerLayout::default();
        let surrogate = SurrogatePredictor::new(SurrogateConfig::default()).unwrap();
        let policy = SelectionPolicy {
            classes: Some(vec![MaskerClass::Traffic]),
            ..short_policy(2)
        };
        let engine = Engine::new(&bank, &layout, policy, &surrogate).unwrap();
        let log = engine
            .run_session(&ambient(3.0), 3.0, SessionMeta::default())
            .unwrap();
        for entry in &log.entries {
            assert_eq!(entry.masker_id.as_deref(), Some("traffic_z"));
        }

        let none = SelectionPolicy {
            ids: Some(vec!["missing".into()]),
            ..short_policy(2)
        };
        let engine = Engine::new(&bank, &layout, none, &surrogate).unwrap();
        assert!(matches!(
            engine.run_session(&ambient(3.0), 3.0, SessionMeta::default()),
            Err(EngineError::NoEligibleMaskers)
        ));
    }

    #[test]
    fn too_short_ambient_is_rejected() {
        let bank = test_bank();
        let layout = SpeakerLayout::default();
        let surrogate = SurrogatePredictor::new(SurrogateConfig::default()).unwrap();
        let engine = Engine::new(&bank, &layout, short_policy(2), &surrogate).unwrap();
        assert!(matches!(
            engine.run_session(&ambient(2.0), 4.0, SessionMeta::default()),
            Err(EngineError::AmbientTooShort { .. })
        ));
    }

    #[test]
    fn predictor_failure_marks_interval_failed() {
        struct Broken;
        impl IsoplPredictor for Broken {
            fn name(&self) -> &'static str {
                "broken"
            }
            fn predict(
                &self,
                _: &AmbientFeatures,
                _: &[CandidateAugmentation],
            ) -> Result<crate::predictor::Prediction, PredictError> {
                Err(PredictError::Backend {
                    backend: "broken",
                    message: "boom".into(),
                })
            }
        }
        let bank = test_bank();
        let layout = SpeakerLayout::default();
        let engine = Engine::new(&bank, &layout, short_policy(2), &Broken).unwrap();
        let log = engine
            .run_session(&ambient(2.0), 2.0, SessionMeta::default())
            .unwrap();
        assert_eq!(log.entries.len(), 2);
        for entry in &log.entries {
            assert!(!entry.masker_on());
            assert_eq!(entry.digital_gain, 0.0);
            assert!(entry.error.as_deref().unwrap().contains("boom"));
        }
    }

    #[test]
    fn jsonl_round_trips() {
        let bank = test_bank();
        let layout = SpeakerLayout::default();
        let surrogate = SurrogatePredictor::new(SurrogateConfig::default()).unwrap();
        let engine = Engine::new(&bank, &layout, short_policy(23), &surrogate).unwrap();
        let log = engine
            .run_session(
                &ambient(3.0),
                3.0,
                SessionMeta {
                    session_id: "abc".into(),
                    site: Some("GFP".into()),
                    condition: Some("AMSS".into()),
                },
            )
            .unwrap();
        let text = log.to_jsonl();
        let back = SessionLog::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back, log);
        assert_eq!(back.to_jsonl(), text);
    }

    #[test]
    fn frequency_report_counts_selections() {
        let mk = |id: &str| SelectionLogEntry {
            interval_index: 0,
            window_start: 0.0,
            masker_id: Some(id.into()),
            digital_gain: 0.1,
            predicted_mean: Some(0.1),
            predicted_std: Some(0.1),
            baseline_mean: Some(0.0),
            baseline_std: Some(0.1),
            backend: Some(BackendTag::Surrogate),
            achieved_spl: Some(60.0),
            error: None,
        };
        let log = SessionLog {
            meta: SessionMeta::default(),
            policy: SelectionPolicy::default(),
            entries: (0..20)
                .map(|i| {
                    let mut e = mk(if i < 13 { "x" } else { "y" });
                    e.interval_index = i;
                    e
                })
                .collect(),
        };
        let report = selection_frequency_report(&[log.clone()]);
        assert_abs_diff_eq!(report["x"], 65.0, epsilon = 1e-9);
        assert_abs_diff_eq!(report["y"], 35.0, epsilon = 1e-9);
        assert_abs_diff_eq!(report.values().sum::<f64>(), 100.0, epsilon = 0.01);

        assert!(selection_frequency_report(&[]).is_empty());

        let only_x = SessionLog {
            entries: log.entries[..13].to_vec(),
            ..log
        };
        let report = selection_frequency_report(&[only_x]);
        assert_eq!(report.len(), 1);
        assert_abs_diff_eq!(report["x"], 100.0, epsilon = 1e-9);
    }

    #[test]
    fn policy_validation_rejects_bad_values() {
        let mut p = SelectionPolicy::default();
        p.interval = 0.0;
        assert!(p.validate().is_err());
        p = SelectionPolicy::default();
        p.gains_per_masker = 0;
        assert!(p.validate().is_err());
        p = SelectionPolicy::default();
        p.log_gain_std = -1.0;
        assert!(p.validate().is_err());
        assert!(SelectionPolicy::default().validate().is_ok());
    }
}

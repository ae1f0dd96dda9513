//! Masker inventory and the gain ↔ SPL chain.
//!
//! Each masker is a nominal 30 s mono track with a measured calibration
//! table mapping digital gain to the SPL it produces at 1 m. Interpolation
//! between table points is linear in the (gain², energy) plane, which is
//! exact when playback energy is proportional to gain squared. Listener
//! levels follow from inverse-square distance falloff and incoherent
//! (energetic) summation across speakers.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acoustics::{energetic_combine, AcousticsError, Waveform};
use crate::audio::{self, AudioError};

#[derive(Debug, Error)]
pub enum BankError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path} row {row}: {message}")]
    Row {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("duplicate masker id '{0}'")]
    DuplicateId(String),
    #[error("masker '{id}': track is {seconds:.2} s, outside the 30 s +/- 0.5 s envelope")]
    BadDuration { id: String, seconds: f64 },
    #[error("calibration for '{masker_id}': {message}")]
    Calibration { masker_id: String, message: String },
    #[error("unknown masker id '{0}'")]
    UnknownMasker(String),
    #[error("invalid speaker layout: {0}")]
    Layout(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Acoustics(#[from] AcousticsError),
}

/// Sound-source category of a masker track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskerClass {
    Bird,
    Water,
    Wind,
    Traffic,
    Construction,
}

impl MaskerClass {
    pub const ALL: [MaskerClass; 5] = [
        MaskerClass::Bird,
        MaskerClass::Water,
        MaskerClass::Wind,
        MaskerClass::Traffic,
        MaskerClass::Construction,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bird" => Some(MaskerClass::Bird),
            "water" => Some(MaskerClass::Water),
            "wind" => Some(MaskerClass::Wind),
            "traffic" => Some(MaskerClass::Traffic),
            "construction" => Some(MaskerClass::Construction),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MaskerClass::Bird => "bird",
            MaskerClass::Water => "water",
            MaskerClass::Wind => "wind",
            MaskerClass::Traffic => "traffic",
            MaskerClass::Construction => "construction",
        }
    }

    /// Natural-source classes (used by the surrogate predictor's
    /// naturalness term).
    pub fn is_natural(self) -> bool {
        matches!(self, MaskerClass::Bird | MaskerClass::Water | MaskerClass::Wind)
    }
}

impl std::fmt::Display for MaskerClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const NOMINAL_TRACK_SECONDS: f64 = 30.0;
pub const TRACK_DURATION_TOLERANCE: f64 = 0.5;

/// A mono masker recording of nominally 30 s.
#[derive(Debug, Clone)]
pub struct MaskerTrack {
    pub id: String,
    pub class: MaskerClass,
    pub audio: Waveform,
}

impl MaskerTrack {
    pub fn new(id: String, class: MaskerClass, audio: Waveform) -> Result<Self, BankError> {
        let seconds = audio.duration();
        if (seconds - NOMINAL_TRACK_SECONDS).abs() > TRACK_DURATION_TOLERANCE {
            return Err(BankError::BadDuration { id, seconds });
        }
        Ok(MaskerTrack { id, class, audio })
    }
}

/// One measured (gain, SPL-at-1 m) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub digital_gain: f64,
    pub spl_dba_1m: f64,
}

/// Measured gain → SPL@1 m mapping for one masker.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    masker_id: String,
    points: Vec<CalibrationPoint>,
}

impl CalibrationTable {
    pub fn new(masker_id: String, points: Vec<CalibrationPoint>) -> Result<Self, BankError> {
        let fail = |message: String| BankError::Calibration {
            masker_id: masker_id.clone(),
            message,
        };
        if points.len() < 2 {
            return Err(fail(format!("needs at least 2 points, got {}", points.len())));
        }
        for p in &points {
            if !(p.digital_gain.is_finite() && p.digital_gain > 0.0) {
                return Err(fail(format!("gain {} is not positive", p.digital_gain)));
            }
            if !p.spl_dba_1m.is_finite() {
                return Err(fail(format!("SPL {} is not finite", p.spl_dba_1m)));
            }
        }
        for pair in points.windows(2) {
            if pair[1].digital_gain <= pair[0].digital_gain {
                return Err(fail(format!(
                    "gains must strictly increase ({} then {})",
                    pair[0].digital_gain, pair[1].digital_gain
                )));
            }
            if pair[1].spl_dba_1m <= pair[0].spl_dba_1m {
                return Err(fail(format!(
                    "SPL must strictly increase with gain ({} dBA then {} dBA)",
                    pair[0].spl_dba_1m, pair[1].spl_dba_1m
                )));
            }
        }
        Ok(CalibrationTable { masker_id, points })
    }

    pub fn masker_id(&self) -> &str {
        &self.masker_id
    }

    pub fn points(&self) -> &[CalibrationPoint] {
        &self.points
    }

    pub fn min_spl(&self) -> f64 {
        self.points.first().expect(">=2 points").spl_dba_1m
    }

    pub fn max_spl(&self) -> f64 {
        self.points.last().expect(">=2 points").spl_dba_1m
    }

    /// Forward interpolation: SPL at 1 m produced by `gain`. Gains outside
    /// the table clamp to the nearest endpoint with a warning.
    pub fn spl_of_gain(&self, gain: f64) -> f64 {
        let first = self.points.first().expect(">=2 points");
        let last = self.points.last().expect(">=2 points");
        if gain <= first.digital_gain {
            if gain < first.digital_gain {
                warn!(
                    "masker {}: gain {gain} below calibrated range, clamping to {}",
                    self.masker_id, first.digital_gain
                );
            }
            return first.spl_dba_1m;
        }
        if gain >= last.digital_gain {
            if gain > last.digital_gain {
                warn!(
                    "masker {}: gain {gain} above calibrated range, clamping to {}",
                    self.masker_id, last.digital_gain
                );
            }
            return last.spl_dba_1m;
        }
        let seg = self
            .points
            .windows(2)
            .find(|p| gain <= p[1].digital_gain)
            .expect("gain within range");
        let (g0, g1) = (seg[0].digital_gain, seg[1].digital_gain);
        let (e0, e1) = (energy(seg[0].spl_dba_1m), energy(seg[1].spl_dba_1m));
        let t = (gain * gain - g0 * g0) / (g1 * g1 - g0 * g0);
        10.0 * (e0 + t * (e1 - e0)).log10()
    }

    /// Inverse interpolation: the digital gain whose playback reaches
    /// `target` dBA at 1 m. Targets outside the calibrated range clamp to
    /// the nearest endpoint with a warning.
    pub fn gain_for_target_spl(&self, target: f64) -> f64 {
        let first = self.points.first().expect(">=2 points");
        let last = self.points.last().expect(">=2 points");
        if target <= first.spl_dba_1m {
            if target < first.spl_dba_1m {
                warn!(
                    "masker {}: target {target:.2} dBA below calibrated range [{:.2}, {:.2}], clamping",
                    self.masker_id, first.spl_dba_1m, last.spl_dba_1m
                );
            }
            return first.digital_gain;
        }
        if target >= last.spl_dba_1m {
            if target > last.spl_dba_1m {
                warn!(
                    "masker {}: target {target:.2} dBA above calibrated range [{:.2}, {:.2}], clamping",
                    self.masker_id, first.spl_dba_1m, last.spl_dba_1m
                );
            }
            return last.digital_gain;
        }
        let et = energy(target);
        let seg = self
            .points
            .windows(2)
            .find(|p| et <= energy(p[1].spl_dba_1m))
            .expect("target within range");
        let (g0, g1) = (seg[0].digital_gain, seg[1].digital_gain);
        let (e0, e1) = (energy(seg[0].spl_dba_1m), energy(seg[1].spl_dba_1m));
        let t = (et - e0) / (e1 - e0);
        (g0 * g0 + t * (g1 * g1 - g0 * g0)).sqrt()
    }
}

fn energy(spl: f64) -> f64 {
    10f64.powf(spl / 10.0)
}

/// Playback geometry: speaker positions and the listener position, metres.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerLayout {
    speakers: Vec<[f64; 3]>,
    listener: [f64; 3],
}

impl SpeakerLayout {
    pub const DEFAULT_SQUARE_SIDE: f64 = 2.2;
    pub const DEFAULT_MOUNT_HEIGHT: f64 = 2.5;
    pub const DEFAULT_EAR_HEIGHT: f64 = 1.2;

    /// Speakers on the corners of a square of side `square_side` at
    /// `mount_height`, listener at `listener`. `speaker_count` must be
    /// 1–4 (corners are filled in order).
    pub fn square(
        speaker_count: usize,
        square_side: f64,
        mount_height: f64,
        listener: [f64; 3],
    ) -> Result<Self, BankError> {
        if !(1..=4).contains(&speaker_count) {
            return Err(BankError::Layout(format!(
                "square layout supports 1-4 speakers, got {speaker_count}"
            )));
        }
        if !(square_side > 0.0 && square_side.is_finite())
            || !(mount_height > 0.0 && mount_height.is_finite())
        {
            return Err(BankError::Layout(
                "square side and mount height must be positive".into(),
            ));
        }
        let h = square_side / 2.0;
        let corners = [[h, h], [-h, h], [-h, -h], [h, -h]];
        let speakers = corners[..speaker_count]
            .iter()
            .map(|&[x, y]| [x, y, mount_height])
            .collect();
        Self::from_positions(speakers, listener)
    }

    pub fn from_positions(
        speakers: Vec<[f64; 3]>,
        listener: [f64; 3],
    ) -> Result<Self, BankError> {
        if speakers.is_empty() {
            return Err(BankError::Layout("at least one speaker required".into()));
        }
        let finite = |p: &[f64; 3]| p.iter().all(|v| v.is_finite());
        if !finite(&listener) || !speakers.iter().all(finite) {
            return Err(BankError::Layout("positions must be finite".into()));
        }
        let layout = SpeakerLayout { speakers, listener };
        if layout.distances().iter().any(|&d| d <= 1e-6) {
            return Err(BankError::Layout(
                "listener coincides with a speaker".into(),
            ));
        }
        Ok(layout)
    }

    pub fn speaker_count(&self) -> usize {
        self.speakers.len()
    }

    /// Speaker–listener distances, metres.
    pub fn distances(&self) -> Vec<f64> {
        self.speakers
            .iter()
            .map(|s| {
                let dx = s[0] - self.listener[0];
                let dy = s[1] - self.listener[1];
                let dz = s[2] - self.listener[2];
                (dx * dx + dy * dy + dz * dz).sqrt()
            })
            .collect()
    }
}

impl Default for SpeakerLayout {
    /// Four speakers on a 2.2 m square at 2.5 m, listener seated at the
    /// centre with ears at 1.2 m.
    fn default() -> Self {
        SpeakerLayout::square(
            4,
            Self::DEFAULT_SQUARE_SIDE,
            Self::DEFAULT_MOUNT_HEIGHT,
            [0.0, 0.0, Self::DEFAULT_EAR_HEIGHT],
        )
        .expect("default layout is valid")
    }
}

/// SPL at the listener when every speaker plays the masker at
/// `spl_at_1m` dBA: inverse-square falloff per speaker, energetic sum.
pub fn listener_spl(spl_at_1m: f64, layout: &SpeakerLayout) -> f64 {
    let levels: Vec<f64> = layout
        .distances()
        .iter()
        .map(|d| spl_at_1m - 20.0 * d.log10())
        .collect();
    energetic_combine(&levels).expect("layout has speakers")
}

/// Per-speaker SPL@1 m required for the layout to reach
/// `desired_listener_spl` at the listener (all speakers at equal level).
pub fn per_speaker_target(desired_listener_spl: f64, layout: &SpeakerLayout) -> f64 {
    let sum_inv_sq: f64 = layout.distances().iter().map(|d| 1.0 / (d * d)).sum();
    desired_listener_spl - 10.0 * sum_inv_sq.log10()
}

/// Full chain: desired listener SPL → per-speaker SPL@1 m → digital gain.
pub fn target_chain(
    table: &CalibrationTable,
    layout: &SpeakerLayout,
    desired_listener_spl: f64,
) -> f64 {
    table.gain_for_target_spl(per_speaker_target(desired_listener_spl, layout))
}

/// One bank entry: a track plus its calibration, when available.
#[derive(Debug, Clone)]
pub struct BankEntry {
    pub track: MaskerTrack,
    pub calibration: Option<CalibrationTable>,
}

/// Immutable masker inventory, keyed by id.
#[derive(Debug, Clone, Default)]
pub struct MaskerBank {
    entries: BTreeMap<String, BankEntry>,
}

impl MaskerBank {
    pub fn new(entries: Vec<BankEntry>) -> Result<Self, BankError> {
        let mut map = BTreeMap::new();
        for entry in entries {
            let id = entry.track.id.clone();
            if map.insert(id.clone(), entry).is_some() {
                return Err(BankError::DuplicateId(id));
            }
        }
        Ok(MaskerBank { entries: map })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&BankEntry> {
        self.entries.get(id)
    }

    pub fn entries(&self) -> impl Iterator<Item = &BankEntry> {
        self.entries.values()
    }

    /// Tracks usable for selection (calibrated), in id order.
    pub fn selectable(&self) -> impl Iterator<Item = &BankEntry> {
        self.entries.values().filter(|e| e.calibration.is_some())
    }

    pub fn calibration(&self, id: &str) -> Result<&CalibrationTable, BankError> {
        self.entries
            .get(id)
            .and_then(|e| e.calibration.as_ref())
            .ok_or_else(|| BankError::UnknownMasker(id.to_string()))
    }
}

/// Loads a bank from a manifest CSV with columns
/// `id,class,audio_path,calib_path`. Relative paths resolve against the
/// manifest's directory. A missing or empty `calib_path` logs a warning and
/// leaves the track unselectable; any malformed row is an error.
pub fn load_manifest(path: &Path) -> Result<MaskerBank, BankError> {
    let manifest_dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| BankError::Csv {
            path: path.to_path_buf(),
            source,
        })?;

    let headers = reader
        .headers()
        .map_err(|source| BankError::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    let col = |name: &str| -> Result<usize, BankError> {
        headers.iter().position(|h| h == name).ok_or_else(|| BankError::Row {
            path: path.to_path_buf(),
            row: 1,
            message: format!("missing column '{name}'"),
        })
    };
    let (id_col, class_col, audio_col, calib_col) = (
        col("id")?,
        col("class")?,
        col("audio_path")?,
        col("calib_path")?,
    );

    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // header is row 1
        let record = record.map_err(|source| BankError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let field = |idx: usize| -> Result<&str, BankError> {
            record.get(idx).ok_or_else(|| BankError::Row {
                path: path.to_path_buf(),
                row,
                message: "short row".into(),
            })
        };
        let id = field(id_col)?.to_string();
        if id.is_empty() {
            return Err(BankError::Row {
                path: path.to_path_buf(),
                row,
                message: "empty id".into(),
            });
        }
        let class_raw = field(class_col)?;
        let class = MaskerClass::parse(class_raw).ok_or_else(|| BankError::Row {
            path: path.to_path_buf(),
            row,
            message: format!("unknown class '{class_raw}'"),
        })?;
        let audio_path = resolve(manifest_dir, field(audio_col)?);
        let audio = audio::read_mono_waveform(&audio_path, crate::DEFAULT_CALIBRATION_DB)?;
        let track = MaskerTrack::new(id.clone(), class, audio)?;

        let calib_raw = field(calib_col)?;
        let calibration = if calib_raw.is_empty() {
            warn!("masker {id}: no calibration table listed; excluded from selection");
            None
        } else {
            let calib_path = resolve(manifest_dir, calib_raw);
            if calib_path.exists() {
                Some(load_calibration(&calib_path, id.clone())?)
            } else {
                warn!(
                    "masker {id}: calibration file {} not found; excluded from selection",
                    calib_path.display()
                );
                None
            }
        };
        entries.push(BankEntry { track, calibration });
    }
    MaskerBank::new(entries)
}

/// Loads a calibration CSV with columns `digital_gain,spl_dba_1m`.
pub fn load_calibration(path: &Path, masker_id: String) -> Result<CalibrationTable, BankError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| BankError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    let mut points = Vec::new();
    for (i, record) in reader.deserialize::<CalibrationPoint>().enumerate() {
        let point = record.map_err(|source| BankError::Row {
            path: path.to_path_buf(),
            row: i + 2,
            message: source.to_string(),
        })?;
        points.push(point);
    }
    CalibrationTable::new(masker_id, points)
}

fn resolve(base: &Path, raw: &str) -> PathBuf {
    let p = Path::new(raw);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_point_table() -> CalibrationTable {
        CalibrationTable::new(
            "m".into(),
            vec![
                CalibrationPoint {
                    digital_gain: 0.10,
                    spl_dba_1m: 46.0,
                },
                CalibrationPoint {
                    digital_gain: 0.1413,
                    spl_dba_1m: 49.0,
                },
            ],
        )
        .unwrap()
    }

    /// Table following E = c·g² exactly, 46..83 dBA in 3 dB steps with
    /// gain 1.0 ↔ 65 dBA at 1 m.
    fn ideal_table() -> CalibrationTable {
        let points = (0..14)
            .map(|i| {
                let spl = 46.0 + 3.0 * i as f64;
                CalibrationPoint {
                    digital_gain: 10f64.powf((spl - 65.0) / 20.0),
                    spl_dba_1m: spl,
                }
            })
            .collect();
        CalibrationTable::new("ideal".into(), points).unwrap()
    }

    #[test]
    fn exact_table_point_is_returned() {
        assert_eq!(two_point_table().gain_for_target_spl(49.0), 0.1413);
        assert_eq!(two_point_table().gain_for_target_spl(46.0), 0.10);
    }

    #[test]
    fn interpolates_in_energy_gain_squared_plane() {
        let g = two_point_table().gain_for_target_spl(47.5);
        assert_abs_diff_eq!(g, 0.1189, epsilon = 5e-5);
    }

    #[test]
    fn out_of_range_targets_clamp() {
        let t = two_point_table();
        assert_eq!(t.gain_for_target_spl(40.0), 0.10);
        assert_eq!(t.gain_for_target_spl(90.0), 0.1413);
        assert_eq!(t.spl_of_gain(0.01), 46.0);
        assert_eq!(t.spl_of_gain(1.0), 49.0);
    }

    #[test]
    fn round_trip_within_tolerance() {
        let t = ideal_table();
        let mut target = t.min_spl();
        while target <= t.max_spl() {
            let g = t.gain_for_target_spl(target);
            assert_abs_diff_eq!(t.spl_of_gain(g), target, epsilon = 0.05);
            target += 0.5;
        }
    }

    #[test]
    fn gain_is_monotone_in_target() {
        let t = ideal_table();
        let mut last = 0.0;
        let mut target = t.min_spl();
        while target <= t.max_spl() {
            let g = t.gain_for_target_spl(target);
            assert!(g > last, "gain {g} not increasing at {target}");
            last = g;
            target += 0.25;
        }
    }

    #[test]
    fn ideal_table_inverts_exactly() {
        // gain 1.0 ↔ 65 dBA by construction
        let t = ideal_table();
        assert_abs_diff_eq!(t.gain_for_target_spl(65.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.spl_of_gain(1.0), 65.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_monotone_and_short_tables() {
        let bad = CalibrationTable::new(
            "m".into(),
            vec![
                CalibrationPoint {
                    digital_gain: 0.1,
                    spl_dba_1m: 50.0,
                },
                CalibrationPoint {
                    digital_gain: 0.2,
                    spl_dba_1m: 49.0,
                },
            ],
        );
        assert!(matches!(bad, Err(BankError::Calibration { .. })));
        let short = CalibrationTable::new(
            "m".into(),
            vec![CalibrationPoint {
                digital_gain: 0.1,
                spl_dba_1m: 50.0,
            }],
        );
        assert!(short.is_err());
    }

    #[test]
    fn single_speaker_inverse_square() {
        let layout =
            SpeakerLayout::from_positions(vec![[2.0, 0.0, 0.0]], [0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(listener_spl(83.0, &layout), 83.0 - 20.0 * 2f64.log10(), epsilon = 1e-9);
        assert_abs_diff_eq!(listener_spl(83.0, &layout), 76.98, epsilon = 0.005);
        let unit = SpeakerLayout::from_positions(vec![[1.0, 0.0, 0.0]], [0.0, 0.0, 0.0]).unwrap();
        assert_eq!(listener_spl(60.0, &unit), 60.0);
    }

    #[test]
    fn four_equidistant_speakers_add_six_db() {
        let layout = SpeakerLayout::from_positions(
            vec![
                [1.0, 0.0, 0.0],
                [-1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, -1.0, 0.0],
            ],
            [0.0, 0.0, 0.0],
        )
        .unwrap();
        assert_abs_diff_eq!(listener_spl(60.0, &layout), 66.02, epsilon = 0.005);
        // n identical speakers = single + 10 log10 n, exactly
        let single = SpeakerLayout::from_positions(vec![[1.0, 0.0, 0.0]], [0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(
            listener_spl(60.0, &layout) - listener_spl(60.0, &single),
            10.0 * 4f64.log10(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn target_chain_round_trips_through_layout() {
        let t = ideal_table();
        let layout = SpeakerLayout::default();
        for desired in [55.0, 60.0, 65.0, 70.0] {
            let gain = target_chain(&t, &layout, desired);
            let achieved = listener_spl(t.spl_of_gain(gain), &layout);
            assert_abs_diff_eq!(achieved, desired, epsilon = 0.05);
        }
    }

    #[test]
    fn chain_reduces_to_table_lookup_at_unit_distance() {
        let t = ideal_table();
        let unit = SpeakerLayout::from_positions(vec![[0.0, 1.0, 0.0]], [0.0, 0.0, 0.0]).unwrap();
        assert_eq!(target_chain(&t, &unit, 58.0), t.gain_for_target_spl(58.0));
    }

    #[test]
    fn four_speakers_at_two_metres_cancel_out() {
        // 66.02 dBA desired − 10·log10(4) + 20·log10(2) = per-speaker 66.02
        let layout = SpeakerLayout::from_positions(
            vec![
                [2.0, 0.0, 0.0],
                [-2.0, 0.0, 0.0],
                [0.0, 2.0, 0.0],
                [0.0, -2.0, 0.0],
            ],
            [0.0, 0.0, 0.0],
        )
        .unwrap();
        assert_abs_diff_eq!(per_speaker_target(66.02, &layout), 66.02, epsilon = 1e-9);
    }

    #[test]
    fn default_layout_matches_field_geometry() {
        let layout = SpeakerLayout::default();
        assert_eq!(layout.speaker_count(), 4);
        let d = layout.distances();
        let expected = (2.0f64 * 1.1 * 1.1 + 1.3 * 1.3).sqrt();
        for di in d {
            assert_abs_diff_eq!(di, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn layout_validation() {
        assert!(SpeakerLayout::from_positions(vec![], [0.0; 3]).is_err());
        assert!(
            SpeakerLayout::from_positions(vec![[0.0, 0.0, 1.0]], [0.0, 0.0, 1.0]).is_err()
        );
        assert!(SpeakerLayout::square(5, 2.2, 2.5, [0.0; 3]).is_err());
        assert!(SpeakerLayout::square(4, -1.0, 2.5, [0.0; 3]).is_err());
    }

    #[test]
    fn bank_rejects_duplicate_ids() {
        let audio = Waveform::new(vec![0.1; 30 * 8000], 8000.0, 94.0).unwrap();
        let mk = |id: &str| BankEntry {
            track: MaskerTrack::new(id.into(), MaskerClass::Bird, audio.clone()).unwrap(),
            calibration: None,
        };
        assert!(matches!(
            MaskerBank::new(vec![mk("a"), mk("a")]),
            Err(BankError::DuplicateId(_))
        ));
        let bank = MaskerBank::new(vec![mk("a"), mk("b")]).unwrap();
        assert_eq!(bank.len(), 2);
        assert_eq!(bank.selectable().count(), 0);
    }

    #[test]
    fn track_duration_envelope() {
        let ok = Waveform::new(vec![0.1; (29.6 * 8000.0) as usize], 8000.0, 94.0).unwrap();
        assert!(MaskerTrack::new("x".into(), MaskerClass::Water, ok).is_ok());
        let short = Waveform::new(vec![0.1; 8000 * 20], 8000.0, 94.0).unwrap();
        assert!(matches!(
            MaskerTrack::new("x".into(), MaskerClass::Water, short),
            Err(BankError::BadDuration { .. })
        ));
    }
}

//! C ABI over the core library: perception formulas, acoustic metrics,
//! calibration tables, and the surrogate predictor.
//!
//! Conventions:
//! - Every fallible call returns [`AmssStatus`]; `AMSS_STATUS_OK` is 0.
//! - On failure a thread-local message is set; fetch it with
//!   [`amss_last_error`].
//! - Objects returned through `out` parameters as pointers are owned by the
//!   caller and must be released with the matching `*_free` function.
//! - All functions are panic-safe: a caught panic reports
//!   `AMSS_STATUS_INTERNAL` instead of unwinding across the boundary.
//!
//! The generated header is `include/amss.h` (regenerated on every build).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use amss_core::acoustics::{metrics_report, MetricsOptions, Waveform};
use amss_core::bank::{self, CalibrationPoint, CalibrationTable, MaskerClass};
use amss_core::perception::{compute_isoev, compute_isopl, PaqRatings};
use amss_core::predictor::{
    AmbientFeatures, CandidateAugmentation, SurrogateConfig, SurrogatePredictor,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmssStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    Utf8 = 2,
    /// An argument was out of range or otherwise invalid.
    InvalidArgument = 3,
    /// A file could not be read or parsed.
    Parse = 4,
    /// A computation failed on otherwise valid input.
    Compute = 5,
    /// A panic was caught at the boundary; this is a bug.
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: AmssStatus, message: impl std::fmt::Display) -> AmssStatus {
    set_error(&message.to_string());
    status
}

/// Runs an FFI body, translating panics into `AMSS_STATUS_INTERNAL`.
fn guarded(body: impl FnOnce() -> AmssStatus) -> AmssStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => {
            if status == AmssStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => fail(AmssStatus::Internal, "caught panic at FFI boundary"),
    }
}

/// Library version as a static NUL-terminated string. Do not free.
#[no_mangle]
pub extern "C" fn amss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the error message of the most recent failed call on this thread
/// into `buf` (NUL-terminated, truncated to `cap` bytes) and returns the
/// full message length excluding the NUL. Returns 0 when the most recent
/// call succeeded. `buf` may be null to query the length alone.
///
/// # Safety
/// If `buf` is non-null it must point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn amss_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

unsafe fn write_out<T>(out: *mut T, value: T) -> AmssStatus {
    if out.is_null() {
        return fail(AmssStatus::NullArgument, "out pointer is null");
    }
    out.write(value);
    AmssStatus::Ok
}

// ---------------------------------------------------------------------------
// Perception formulas
// ---------------------------------------------------------------------------

unsafe fn circumplex(
    ratings: *const u8,
    out: *mut f64,
    f: impl Fn(&PaqRatings) -> f64,
) -> AmssStatus {
    if ratings.is_null() || out.is_null() {
        return fail(AmssStatus::NullArgument, "ratings and out must be non-null");
    }
    let r = std::slice::from_raw_parts(ratings, 8);
    match PaqRatings::new(r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7]) {
        Ok(paq) => write_out(out, f(&paq)),
        Err(e) => fail(AmssStatus::InvalidArgument, e),
    }
}

/// Pleasantness coordinate in [-1, 1] from the eight PAQ ratings
/// (1–5 each) in the order pl, ev, ch, vi, un, ca, an, mo.
///
/// # Safety
/// `ratings` must point to 8 readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amss_isopl(ratings: *const u8, out: *mut f64) -> AmssStatus {
    guarded(|| circumplex(ratings, out, |r| compute_isopl(r).value()))
}

/// Eventfulness coordinate in [-1, 1]; same contract as [`amss_isopl`].
///
/// # Safety
/// `ratings` must point to 8 readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amss_isoev(ratings: *const u8, out: *mut f64) -> AmssStatus {
    guarded(|| circumplex(ratings, out, |r| compute_isoev(r).value()))
}

// ---------------------------------------------------------------------------
// Acoustic metrics
// ---------------------------------------------------------------------------

/// Summary metrics of a calibrated signal.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmssMetrics {
    /// A-weighted equivalent level, dB.
    pub laeq: f64,
    /// C-weighted equivalent level, dB.
    pub lceq: f64,
    /// Loudness exceeded 95 % of the time, sone.
    pub n95: f64,
    /// Signal length, seconds.
    pub duration_seconds: f64,
}

/// Computes LAeq, LCeq and N95 of `len` mono samples at `sample_rate`.
/// `calibration_db` is the SPL a full-scale sine reads.
///
/// # Safety
/// `samples` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amss_metrics(
    samples: *const f64,
    len: usize,
    sample_rate: f64,
    calibration_db: f64,
    out: *mut AmssMetrics,
) -> AmssStatus {
    guarded(|| {
        if samples.is_null() || out.is_null() {
            return fail(AmssStatus::NullArgument, "samples and out must be non-null");
        }
        let data = std::slice::from_raw_parts(samples, len).to_vec();
        let w = match Waveform::new(data, sample_rate, calibration_db) {
            Ok(w) => w,
            Err(e) => return fail(AmssStatus::InvalidArgument, e),
        };
        match metrics_report(&w, &MetricsOptions::default()) {
            Ok(report) => write_out(
                out,
                AmssMetrics {
                    laeq: report.laeq,
                    lceq: report.lceq,
                    n95: report.n95,
                    duration_seconds: report.duration,
                },
            ),
            Err(e) => fail(AmssStatus::Compute, e),
        }
    })
}

// ---------------------------------------------------------------------------
// Calibration tables
// ---------------------------------------------------------------------------

/// Opaque gain ↔ SPL@1 m mapping for one masker.
pub struct AmssCalibration(CalibrationTable);

/// Builds a calibration table from `len` (gain, SPL@1 m) pairs.
///
/// # Safety
/// `gains` and `spls` must point to `len` readable doubles; `out` must be
/// writable. The returned handle must be freed with
/// [`amss_calibration_free`].
#[no_mangle]
pub unsafe extern "C" fn amss_calibration_new(
    gains: *const f64,
    spls: *const f64,
    len: usize,
    out: *mut *mut AmssCalibration,
) -> AmssStatus {
    guarded(|| {
        if gains.is_null() || spls.is_null() || out.is_null() {
            return fail(AmssStatus::NullArgument, "gains, spls and out must be non-null");
        }
        let points = std::slice::from_raw_parts(gains, len)
            .iter()
            .zip(std::slice::from_raw_parts(spls, len))
            .map(|(&digital_gain, &spl_dba_1m)| CalibrationPoint {
                digital_gain,
                spl_dba_1m,
            })
            .collect();
        match CalibrationTable::new("ffi".into(), points) {
            Ok(table) => write_out(out, Box::into_raw(Box::new(AmssCalibration(table)))),
            Err(e) => fail(AmssStatus::InvalidArgument, e),
        }
    })
}

/// Loads a calibration CSV (`digital_gain,spl_dba_1m` header row).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable. The
/// returned handle must be freed with [`amss_calibration_free`].
#[no_mangle]
pub unsafe extern "C" fn amss_calibration_open(
    path: *const c_char,
    out: *mut *mut AmssCalibration,
) -> AmssStatus {
    guarded(|| {
        if path.is_null() || out.is_null() {
            return fail(AmssStatus::NullArgument, "path and out must be non-null");
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(s) => Path::new(s),
            Err(e) => return fail(AmssStatus::Utf8, e),
        };
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "table".into());
        match bank::load_calibration(path, id) {
            Ok(table) => write_out(out, Box::into_raw(Box::new(AmssCalibration(table)))),
            Err(e) => fail(AmssStatus::Parse, e),
        }
    })
}

/// Interpolated SPL@1 m for a digital gain (clamped to the table's range).
///
/// # Safety
/// `table` must be a live handle from a constructor; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amss_calibration_spl_of_gain(
    table: *const AmssCalibration,
    gain: f64,
    out: *mut f64,
) -> AmssStatus {
    guarded(|| match table.as_ref() {
        Some(t) => {
            if !(gain.is_finite() && gain > 0.0) {
                return fail(AmssStatus::InvalidArgument, format!("gain {gain} not positive"));
            }
            write_out(out, t.0.spl_of_gain(gain))
        }
        None => fail(AmssStatus::NullArgument, "table is null"),
    })
}

/// Digital gain whose interpolated SPL equals `target_spl` (clamped to the
/// table's range).
///
/// # Safety
/// `table` must be a live handle from a constructor; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amss_calibration_gain_for_spl(
    table: *const AmssCalibration,
    target_spl: f64,
    out: *mut f64,
) -> AmssStatus {
    guarded(|| match table.as_ref() {
        Some(t) => {
            if !target_spl.is_finite() {
                return fail(
                    AmssStatus::InvalidArgument,
                    format!("target {target_spl} not finite"),
                );
            }
            write_out(out, t.0.gain_for_target_spl(target_spl))
        }
        None => fail(AmssStatus::NullArgument, "table is null"),
    })
}

/// Releases a calibration handle. Null is a no-op.
///
/// # Safety
/// `table` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn amss_calibration_free(table: *mut AmssCalibration) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

// ---------------------------------------------------------------------------
// Surrogate predictor
// ---------------------------------------------------------------------------

/// Opaque handle to the local pleasantness predictor.
pub struct AmssSurrogate(SurrogatePredictor);

/// Tunable parameters of the surrogate predictor; see
/// [`amss_surrogate_config_default`] for the standard values.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmssSurrogateConfig {
    pub bias: f64,
    pub level_weight: f64,
    pub naturalness_weight: f64,
    pub smr_weight: f64,
    pub std: f64,
    pub reference_level: f64,
}

impl From<AmssSurrogateConfig> for SurrogateConfig {
    fn from(c: AmssSurrogateConfig) -> Self {
        SurrogateConfig {
            bias: c.bias,
            level_weight: c.level_weight,
            naturalness_weight: c.naturalness_weight,
            smr_weight: c.smr_weight,
            std: c.std,
            reference_level: c.reference_level,
        }
    }
}

/// Masker sound-source category.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmssMaskerClass {
    Bird = 0,
    Water = 1,
    Wind = 2,
    Traffic = 3,
    Construction = 4,
}

impl From<AmssMaskerClass> for MaskerClass {
    fn from(c: AmssMaskerClass) -> Self {
        match c {
            AmssMaskerClass::Bird => MaskerClass::Bird,
            AmssMaskerClass::Water => MaskerClass::Water,
            AmssMaskerClass::Wind => MaskerClass::Wind,
            AmssMaskerClass::Traffic => MaskerClass::Traffic,
            AmssMaskerClass::Construction => MaskerClass::Construction,
        }
    }
}

/// Writes the default surrogate configuration.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn amss_surrogate_config_default(
    out: *mut AmssSurrogateConfig,
) -> AmssStatus {
    guarded(|| {
        let d = SurrogateConfig::default();
        write_out(
            out,
            AmssSurrogateConfig {
                bias: d.bias,
                level_weight: d.level_weight,
                naturalness_weight: d.naturalness_weight,
                smr_weight: d.smr_weight,
                std: d.std,
                reference_level: d.reference_level,
            },
        )
    })
}

/// Creates a surrogate predictor. `config` may be null for defaults.
///
/// # Safety
/// `config` must be null or readable; `out` must be writable. The returned
/// handle must be freed with [`amss_surrogate_free`].
#[no_mangle]
pub unsafe extern "C" fn amss_surrogate_new(
    config: *const AmssSurrogateConfig,
    out: *mut *mut AmssSurrogate,
) -> AmssStatus {
    guarded(|| {
        if out.is_null() {
            return fail(AmssStatus::NullArgument, "out pointer is null");
        }
        let cfg = match config.as_ref() {
            Some(c) => SurrogateConfig::from(*c),
            None => SurrogateConfig::default(),
        };
        match SurrogatePredictor::new(cfg) {
            Ok(p) => write_out(out, Box::into_raw(Box::new(AmssSurrogate(p)))),
            Err(e) => fail(AmssStatus::InvalidArgument, e),
        }
    })
}

fn features_for(laeq: f64) -> Result<AmbientFeatures, AmssStatus> {
    if !laeq.is_finite() {
        set_error(&format!("ambient laeq {laeq} not finite"));
        return Err(AmssStatus::InvalidArgument);
    }
    // The surrogate only consumes the broadband level; a single empty-ish
    // frame satisfies the feature contract.
    AmbientFeatures::new(vec![vec![0.0]], 0.1, laeq).map_err(|e| {
        set_error(&e.to_string());
        AmssStatus::InvalidArgument
    })
}

/// Predicted pleasantness (mean, std) of leaving an ambient of the given
/// LAeq unaugmented.
///
/// # Safety
/// `predictor` must be a live handle; `out_mean` and `out_std` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn amss_surrogate_baseline(
    predictor: *const AmssSurrogate,
    ambient_laeq: f64,
    out_mean: *mut f64,
    out_std: *mut f64,
) -> AmssStatus {
    guarded(|| {
        let p = match predictor.as_ref() {
            Some(p) => p,
            None => return fail(AmssStatus::NullArgument, "predictor is null"),
        };
        if out_mean.is_null() || out_std.is_null() {
            return fail(AmssStatus::NullArgument, "out pointers must be non-null");
        }
        let features = match features_for(ambient_laeq) {
            Ok(f) => f,
            Err(status) => return status,
        };
        let dist = p.0.baseline(&features);
        out_mean.write(dist.mean);
        out_std.write(dist.std);
        AmssStatus::Ok
    })
}

/// Predicted pleasantness (mean, std) of one masker playing `smr_db` above
/// (+) or below (−) an ambient of the given LAeq.
///
/// # Safety
/// `predictor` must be a live handle; `out_mean` and `out_std` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn amss_surrogate_score(
    predictor: *const AmssSurrogate,
    ambient_laeq: f64,
    class: AmssMaskerClass,
    digital_gain: f64,
    smr_db: f64,
    out_mean: *mut f64,
    out_std: *mut f64,
) -> AmssStatus {
    guarded(|| {
        let p = match predictor.as_ref() {
            Some(p) => p,
            None => return fail(AmssStatus::NullArgument, "predictor is null"),
        };
        if out_mean.is_null() || out_std.is_null() {
            return fail(AmssStatus::NullArgument, "out pointers must be non-null");
        }
        let features = match features_for(ambient_laeq) {
            Ok(f) => f,
            Err(status) => return status,
        };
        let candidate =
            match CandidateAugmentation::new("ffi".into(), class.into(), digital_gain, smr_db) {
                Ok(c) => c,
                Err(e) => return fail(AmssStatus::InvalidArgument, e),
            };
        let dist = p.0.predict_one(&features, &candidate);
        out_mean.write(dist.mean);
        out_std.write(dist.std);
        AmssStatus::Ok
    })
}

/// Releases a surrogate handle. Null is a no-op.
///
/// # Safety
/// `predictor` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn amss_surrogate_free(predictor: *mut AmssSurrogate) {
    if !predictor.is_null() {
        drop(Box::from_raw(predictor));
    }
}

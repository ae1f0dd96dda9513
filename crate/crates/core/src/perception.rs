//! Perceptual indices derived from listener questionnaires.
//!
//! The circumplex indices `isopl` (pleasantness) and `isoev` (eventfulness)
//! project eight 5-point adjective ratings onto two orthogonal axes, scaled
//! so both land in [-1, 1]. The same normalized scale is reused for the
//! single-item ratings, PANAS affect sums and PRSS restorativeness
//! dimensions, which makes changes comparable across instruments as a
//! percentage of scale width.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("rating {name} = {value} outside the 1..=5 response scale")]
    RatingOutOfRange { name: &'static str, value: u8 },
    #[error("item score {value} outside the {lo}..={hi} response scale")]
    ItemOutOfRange { value: u8, lo: u8, hi: u8 },
    #[error("expected exactly {expected} items, got {got}")]
    WrongItemCount { expected: usize, got: usize },
    #[error("value {x} outside the [{lo}, {hi}] scale")]
    ValueOutOfScale { x: f64, lo: f64, hi: f64 },
    #[error("scale bounds do not form an interval: lo = {lo}, hi = {hi}")]
    EmptyScale { lo: f64, hi: f64 },
    #[error("no questionnaire items provided")]
    NoItems,
}

/// A dimensionless score on the common [-1, 1] scale.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizedScore(f64);

impl NormalizedScore {
    pub fn new(value: f64) -> Result<Self, PerceptionError> {
        if !value.is_finite() || !(-1.0..=1.0).contains(&value) {
            return Err(PerceptionError::ValueOutOfScale {
                x: value,
                lo: -1.0,
                hi: 1.0,
            });
        }
        Ok(NormalizedScore(value))
    }

    /// For internally computed values that can overshoot the bound by a few
    /// ulps; anything further out is a bug.
    pub(crate) fn from_computed(value: f64) -> Self {
        debug_assert!(value.abs() <= 1.0 + 1e-9, "score {value} out of range");
        NormalizedScore(value.clamp(-1.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<NormalizedScore> for f64 {
    fn from(s: NormalizedScore) -> f64 {
        s.0
    }
}

/// The eight adjective ratings of the circumplex instrument, each on
/// 1 ("strongly disagree") to 5 ("strongly agree").
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PaqRatings {
    r_pl: u8,
    r_ev: u8,
    r_ch: u8,
    r_vi: u8,
    r_un: u8,
    r_ca: u8,
    r_an: u8,
    r_mo: u8,
}

impl PaqRatings {
    /// Order: pleasant, eventful, chaotic, vibrant, uneventful, calm,
    /// annoying, monotonous.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        r_pl: u8,
        r_ev: u8,
        r_ch: u8,
        r_vi: u8,
        r_un: u8,
        r_ca: u8,
        r_an: u8,
        r_mo: u8,
    ) -> Result<Self, PerceptionError> {
        for (name, value) in [
            ("r_pl", r_pl),
            ("r_ev", r_ev),
            ("r_ch", r_ch),
            ("r_vi", r_vi),
            ("r_un", r_un),
            ("r_ca", r_ca),
            ("r_an", r_an),
            ("r_mo", r_mo),
        ] {
            if !(1..=5).contains(&value) {
                return Err(PerceptionError::RatingOutOfRange { name, value });
            }
        }
        Ok(PaqRatings {
            r_pl,
            r_ev,
            r_ch,
            r_vi,
            r_un,
            r_ca,
            r_an,
            r_mo,
        })
    }
}

/// Scale width of the circumplex projection: 8 + 8√2.
fn circumplex_denominator() -> f64 {
    8.0 + 8.0 * std::f64::consts::SQRT_2
}

/// Pleasantness axis:
/// `(2(r_pl − r_an) + √2(r_ca − r_ch + r_vi − r_mo)) / (8 + 8√2)`.
pub fn compute_isopl(r: &PaqRatings) -> NormalizedScore {
    let diag = f64::from(i16::from(r.r_ca) - i16::from(r.r_ch))
        + f64::from(i16::from(r.r_vi) - i16::from(r.r_mo));
    let axis = 2.0 * f64::from(i16::from(r.r_pl) - i16::from(r.r_an));
    NormalizedScore::from_computed(
        (axis + std::f64::consts::SQRT_2 * diag) / circumplex_denominator(),
    )
}

/// Eventfulness axis:
/// `(2(r_ev − r_un) + √2(r_ch − r_ca + r_vi − r_mo)) / (8 + 8√2)`.
pub fn compute_isoev(r: &PaqRatings) -> NormalizedScore {
    let diag = f64::from(i16::from(r.r_ch) - i16::from(r.r_ca))
        + f64::from(i16::from(r.r_vi) - i16::from(r.r_mo));
    let axis = 2.0 * f64::from(i16::from(r.r_ev) - i16::from(r.r_un));
    NormalizedScore::from_computed(
        (axis + std::f64::consts::SQRT_2 * diag) / circumplex_denominator(),
    )
}

/// Affine map of `x` from `[lo, hi]` onto `[-1, 1]`.
pub fn normalize_scale(x: f64, lo: f64, hi: f64) -> Result<NormalizedScore, PerceptionError> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(PerceptionError::EmptyScale { lo, hi });
    }
    if !x.is_finite() || x < lo || x > hi {
        return Err(PerceptionError::ValueOutOfScale { x, lo, hi });
    }
    Ok(NormalizedScore::from_computed(2.0 * (x - lo) / (hi - lo) - 1.0))
}

/// Five positive-affect and five negative-affect items, each 1–5.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PanasResponses {
    positive: [u8; 5],
    negative: [u8; 5],
}

impl PanasResponses {
    pub fn new(positive: [u8; 5], negative: [u8; 5]) -> Result<Self, PerceptionError> {
        for value in positive.iter().chain(negative.iter()) {
            if !(1..=5).contains(value) {
                return Err(PerceptionError::ItemOutOfRange {
                    value: *value,
                    lo: 1,
                    hi: 5,
                });
            }
        }
        Ok(PanasResponses { positive, negative })
    }
}

/// Positive- and negative-affect sums, normalized from their [5, 25] range.
pub fn panas_scores(p: &PanasResponses) -> (NormalizedScore, NormalizedScore) {
    let sum = |items: &[u8; 5]| items.iter().map(|&v| f64::from(v)).sum::<f64>();
    let pa = normalize_scale(sum(&p.positive), 5.0, 25.0).expect("validated items");
    let na = normalize_scale(sum(&p.negative), 5.0, 25.0).expect("validated items");
    (pa, na)
}

/// Restorativeness dimensions of the short PRSS instrument. Extent is split
/// into its coherence and scope sub-dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrssDimension {
    Fascination,
    BeingAway,
    Compatibility,
    ExtentCoherence,
    ExtentScope,
}

impl PrssDimension {
    pub const ALL: [PrssDimension; 5] = [
        PrssDimension::Fascination,
        PrssDimension::BeingAway,
        PrssDimension::Compatibility,
        PrssDimension::ExtentCoherence,
        PrssDimension::ExtentScope,
    ];

    /// Short code used in CSV column names (`prss_<code>_<item>`).
    pub fn code(self) -> &'static str {
        match self {
            PrssDimension::Fascination => "fas",
            PrssDimension::BeingAway => "ba",
            PrssDimension::Compatibility => "com",
            PrssDimension::ExtentCoherence => "ec",
            PrssDimension::ExtentScope => "es",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.code() == code)
    }
}

/// Item scores (1–7) grouped by dimension. An item belongs to exactly one
/// dimension by construction of the map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrssResponses {
    items: BTreeMap<PrssDimension, Vec<u8>>,
}

impl PrssResponses {
    pub fn new(items: BTreeMap<PrssDimension, Vec<u8>>) -> Result<Self, PerceptionError> {
        if items.is_empty() || items.values().any(Vec::is_empty) {
            return Err(PerceptionError::NoItems);
        }
        for value in items.values().flatten() {
            if !(1..=7).contains(value) {
                return Err(PerceptionError::ItemOutOfRange {
                    value: *value,
                    lo: 1,
                    hi: 7,
                });
            }
        }
        Ok(PrssResponses { items })
    }
}

/// Per-dimension mean item score, normalized from the 7-point scale.
pub fn prss_dimensions(p: &PrssResponses) -> BTreeMap<PrssDimension, NormalizedScore> {
    p.items
        .iter()
        .map(|(&dim, items)| {
            let mean =
                items.iter().map(|&v| f64::from(v)).sum::<f64>() / items.len() as f64;
            let score = normalize_scale(mean, 1.0, 7.0).expect("validated items");
            (dim, score)
        })
        .collect()
}

/// Change from `mu_before` to `mu_after` expressed as a percentage of the
/// [-1, 1] scale width (which is 2).
pub fn percent_scale_change(mu_before: NormalizedScore, mu_after: NormalizedScore) -> f64 {
    100.0 * (mu_after.value() - mu_before.value()) / 2.0
}

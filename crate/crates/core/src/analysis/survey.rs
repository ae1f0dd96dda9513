//! Survey CSV ingestion.
//!
//! One row per (participant, site, condition) listening session. Raw
//! ratings are validated and immediately collapsed to the fifteen
//! normalized perceptual attributes used everywhere downstream; nothing
//! after this module sees a raw 1–5 rating.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::perception::{
    compute_isoev, compute_isopl, normalize_scale, panas_scores, prss_dimensions, PanasResponses,
    PaqRatings, PrssDimension, PrssResponses,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Site {
    #[serde(rename = "GFP")]
    Gfp,
    #[serde(rename = "RTGP")]
    Rtgp,
}

impl Site {
    pub fn code(self) -> &'static str {
        match self {
            Site::Gfp => "GFP",
            Site::Rtgp => "RTGP",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "GFP" => Some(Site::Gfp),
            "RTGP" => Some(Site::Rtgp),
            _ => None,
        }
    }
}

impl std::fmt::Display for Site {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "AMB")]
    Amb,
    #[serde(rename = "AMSS")]
    Amss,
}

impl Condition {
    pub fn code(self) -> &'static str {
        match self {
            Condition::Amb => "AMB",
            Condition::Amss => "AMSS",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "AMB" => Some(Condition::Amb),
            "AMSS" => Some(Condition::Amss),
            _ => None,
        }
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

/// The normalized perceptual attributes, all on [−1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Isopl,
    Isoev,
    /// Perceived loudness of the overall environment.
    Noi,
    /// Perceived presence of natural sounds.
    Nat,
    /// Perceived presence of human sounds.
    Hum,
    /// Overall soundscape quality.
    Osq,
    /// Appropriateness of the soundscape to the place.
    Appr,
    /// Perceived pleasantness of the visual scene.
    Pln,
    /// PANAS positive affect.
    Pa,
    /// PANAS negative affect.
    Na,
    /// Restorativeness: fascination.
    Fas,
    /// Restorativeness: being-away.
    Ba,
    /// Restorativeness: compatibility.
    Com,
    /// Restorativeness: extent-coherence.
    Ec,
    /// Restorativeness: extent-scope.
    Es,
}

impl Attribute {
    pub const ALL: [Attribute; 15] = [
        Attribute::Isopl,
        Attribute::Isoev,
        Attribute::Noi,
        Attribute::Nat,
        Attribute::Hum,
        Attribute::Osq,
        Attribute::Appr,
        Attribute::Pln,
        Attribute::Pa,
        Attribute::Na,
        Attribute::Fas,
        Attribute::Ba,
        Attribute::Com,
        Attribute::Ec,
        Attribute::Es,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Attribute::Isopl => "isopl",
            Attribute::Isoev => "isoev",
            Attribute::Noi => "noi",
            Attribute::Nat => "nat",
            Attribute::Hum => "hum",
            Attribute::Osq => "osq",
            Attribute::Appr => "appr",
            Attribute::Pln => "pln",
            Attribute::Pa => "pa",
            Attribute::Na => "na",
            Attribute::Fas => "fas",
            Attribute::Ba => "ba",
            Attribute::Com => "com",
            Attribute::Ec => "ec",
            Attribute::Es => "es",
        }
    }
}

impl std::fmt::Display for Attribute {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

fn attribute_of_dimension(d: PrssDimension) -> Attribute {
    match d {
        PrssDimension::Fascination => Attribute::Fas,
        PrssDimension::BeingAway => Attribute::Ba,
        PrssDimension::Compatibility => Attribute::Com,
        PrssDimension::ExtentCoherence => Attribute::Ec,
        PrssDimension::ExtentScope => Attribute::Es,
    }
}

/// One survey row after validation and normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyRecord {
    pub participant_id: String,
    pub site: Site,
    pub condition: Condition,
    pub attributes: BTreeMap<Attribute, f64>,
}

const PAQ_COLUMNS: [&str; 8] = [
    "r_pl", "r_ev", "r_ch", "r_vi", "r_un", "r_ca", "r_an", "r_mo",
];
const ITEM_COLUMNS: [(&str, Attribute); 6] = [
    ("noi", Attribute::Noi),
    ("nat", Attribute::Nat),
    ("hum", Attribute::Hum),
    ("osq", Attribute::Osq),
    ("appr", Attribute::Appr),
    ("pln", Attribute::Pln),
];

/// Reads and validates a survey CSV (UTF-8, header row required). Any
/// malformed cell rejects its whole row with the 1-based row number
/// (header is row 1).
pub fn read_survey<R: Read>(reader: R) -> Result<Vec<SurveyRecord>, AnalysisError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = csv_reader.headers()?.clone();
    let column = |name: &str| -> Result<usize, AnalysisError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| AnalysisError::MissingColumn(name.to_string()))
    };

    let id_col = column("participant_id")?;
    let site_col = column("site")?;
    let condition_col = column("condition")?;
    let paq_cols: Vec<usize> = PAQ_COLUMNS
        .iter()
        .map(|c| column(c))
        .collect::<Result<_, _>>()?;
    let item_cols: Vec<usize> = ITEM_COLUMNS
        .iter()
        .map(|(c, _)| column(c))
        .collect::<Result<_, _>>()?;
    let panas_cols: Vec<usize> = (1..=5)
        .map(|k| column(&format!("panas_p{k}")))
        .chain((1..=5).map(|k| column(&format!("panas_n{k}"))))
        .collect::<Result<_, _>>()?;

    // prss_<dim>_<item> columns, grouped by dimension
    let mut prss_cols: BTreeMap<PrssDimension, Vec<usize>> = BTreeMap::new();
    for (idx, header) in headers.iter().enumerate() {
        let Some(rest) = header.strip_prefix("prss_") else {
            continue;
        };
        let code = rest.split('_').next().unwrap_or(rest);
        let dim = PrssDimension::from_code(code).ok_or_else(|| AnalysisError::Row {
            row: 1,
            message: format!("unrecognized column '{header}'"),
        })?;
        prss_cols.entry(dim).or_default().push(idx);
    }
    for dim in PrssDimension::ALL {
        if !prss_cols.contains_key(&dim) {
            return Err(AnalysisError::MissingColumn(format!(
                "prss_{}_*",
                dim.code()
            )));
        }
    }

    let mut records = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let bad = |message: String| AnalysisError::Row { row, message };
        let cell = |idx: usize| -> Result<&str, AnalysisError> {
            record
                .get(idx)
                .ok_or_else(|| bad(format!("missing cell for '{}'", &headers[idx])))
        };
        let rating = |idx: usize| -> Result<u8, AnalysisError> {
            let raw = cell(idx)?;
            raw.parse::<u8>()
                .map_err(|_| bad(format!("column '{}': '{raw}' is not a rating", &headers[idx])))
        };

        let participant_id = cell(id_col)?.to_string();
        if participant_id.is_empty() {
            return Err(bad("participant_id is empty".into()));
        }
        let site = Site::parse(cell(site_col)?)
            .ok_or_else(|| bad(format!("unknown site '{}'", cell(site_col).unwrap())))?;
        let condition = Condition::parse(cell(condition_col)?).ok_or_else(|| {
            bad(format!(
                "unknown condition '{}'",
                cell(condition_col).unwrap()
            ))
        })?;

        let paq: Vec<u8> = paq_cols
            .iter()
            .map(|&idx| rating(idx))
            .collect::<Result<_, _>>()?;
        let ratings = PaqRatings::new(
            paq[0], paq[1], paq[2], paq[3], paq[4], paq[5], paq[6], paq[7],
        )
        .map_err(|e| bad(e.to_string()))?;

        let mut attributes = BTreeMap::new();
        attributes.insert(Attribute::Isopl, compute_isopl(&ratings).value());
        attributes.insert(Attribute::Isoev, compute_isoev(&ratings).value());

        for (&idx, (_, attribute)) in item_cols.iter().zip(ITEM_COLUMNS.iter()) {
            let value = rating(idx)?;
            let normalized = normalize_scale(f64::from(value), 1.0, 5.0)
                .map_err(|e| bad(e.to_string()))?;
            attributes.insert(*attribute, normalized.value());
        }

        let mut prss_items: BTreeMap<PrssDimension, Vec<u8>> = BTreeMap::new();
        for (&dim, cols) in &prss_cols {
            let items: Vec<u8> = cols
                .iter()
                .map(|&idx| rating(idx))
                .collect::<Result<_, _>>()?;
            prss_items.insert(dim, items);
        }
        let prss = PrssResponses::new(prss_items).map_err(|e| bad(e.to_string()))?;
        for (dim, score) in prss_dimensions(&prss) {
            attributes.insert(attribute_of_dimension(dim), score.value());
        }

        let panas_values: Vec<u8> = panas_cols
            .iter()
            .map(|&idx| rating(idx))
            .collect::<Result<_, _>>()?;
        let positive: [u8; 5] = panas_values[..5].try_into().expect("five items");
        let negative: [u8; 5] = panas_values[5..].try_into().expect("five items");
        let panas = PanasResponses::new(positive, negative).map_err(|e| bad(e.to_string()))?;
        let (pa, na) = panas_scores(&panas);
        attributes.insert(Attribute::Pa, pa.value());
        attributes.insert(Attribute::Na, na.value());

        records.push(SurveyRecord {
            participant_id,
            site,
            condition,
            attributes,
        });
    }
    Ok(records)
}

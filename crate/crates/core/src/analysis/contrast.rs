//! Descriptive contrasts over survey records.
//!
//! Cells are (site, condition) groups. Each attribute gets a mean and
//! sample SD per cell, then the between-condition (AMB → AMSS, per site)
//! and between-site (GFP → RTGP, per condition) differences are expressed
//! as percent-of-scale changes. Empty cells are simply absent — nothing
//! here produces a NaN.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::stats::{holm_adjust, kendall_tau_b};
use super::survey::{Attribute, Condition, Site, SurveyRecord};
use super::AnalysisError;
use crate::perception::{percent_scale_change, NormalizedScore};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStat {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single observation.
    pub sd: f64,
}

/// Mean/SD per attribute for one (site, condition) cell.
pub type AttributeStat = BTreeMap<Attribute, CellStat>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContrastTable {
    /// Per-cell descriptive statistics.
    pub cells: BTreeMap<(Site, Condition), AttributeStat>,
    /// Percent-of-scale change AMB → AMSS within each site.
    pub condition_changes: BTreeMap<Site, BTreeMap<Attribute, f64>>,
    /// Percent-of-scale change GFP → RTGP within each condition.
    pub site_changes: BTreeMap<Condition, BTreeMap<Attribute, f64>>,
}

fn stat_of(values: &[f64]) -> CellStat {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    CellStat { n, mean, sd }
}

fn change_between(before: &AttributeStat, after: &AttributeStat) -> BTreeMap<Attribute, f64> {
    let mut out = BTreeMap::new();
    for (attribute, b) in before {
        let Some(a) = after.get(attribute) else {
            continue;
        };
        // cell means stay inside the normalized scale up to rounding
        let b_score = NormalizedScore::from_computed(b.mean);
        let a_score = NormalizedScore::from_computed(a.mean);
        out.insert(*attribute, percent_scale_change(b_score, a_score));
    }
    out
}

/// Builds the full descriptive table. Only attribute/cell combinations
/// with data appear; contrasts require both cells of the pair.
pub fn contrast_table(records: &[SurveyRecord]) -> ContrastTable {
    let mut values: BTreeMap<(Site, Condition), BTreeMap<Attribute, Vec<f64>>> = BTreeMap::new();
    for record in records {
        let cell = values.entry((record.site, record.condition)).or_default();
        for (&attribute, &value) in &record.attributes {
            cell.entry(attribute).or_default().push(value);
        }
    }

    let cells: BTreeMap<(Site, Condition), AttributeStat> = values
        .into_iter()
        .map(|(key, attrs)| {
            let stats = attrs
                .into_iter()
                .map(|(attribute, vals)| (attribute, stat_of(&vals)))
                .collect();
            (key, stats)
        })
        .collect();

    let mut condition_changes = BTreeMap::new();
    for site in [Site::Gfp, Site::Rtgp] {
        if let (Some(amb), Some(amss)) = (
            cells.get(&(site, Condition::Amb)),
            cells.get(&(site, Condition::Amss)),
        ) {
            condition_changes.insert(site, change_between(amb, amss));
        }
    }
    let mut site_changes = BTreeMap::new();
    for condition in [Condition::Amb, Condition::Amss] {
        if let (Some(gfp), Some(rtgp)) = (
            cells.get(&(Site::Gfp, condition)),
            cells.get(&(Site::Rtgp, condition)),
        ) {
            site_changes.insert(condition, change_between(gfp, rtgp));
        }
    }

    ContrastTable {
        cells,
        condition_changes,
        site_changes,
    }
}

impl ContrastTable {
    /// `site,condition,attribute,n,mean,sd` rows.
    pub fn write_cells_csv<W: Write>(&self, out: W) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["site", "condition", "attribute", "n", "mean", "sd"])?;
        for ((site, condition), attrs) in &self.cells {
            for (attribute, stat) in attrs {
                w.write_record([
                    site.code(),
                    condition.code(),
                    attribute.code(),
                    &stat.n.to_string(),
                    &stat.mean.to_string(),
                    &stat.sd.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `contrast,scope,attribute,percent_change` rows; `contrast` is
    /// `condition` (AMB→AMSS within a site) or `site` (GFP→RTGP within a
    /// condition).
    pub fn write_changes_csv<W: Write>(&self, out: W) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["contrast", "scope", "attribute", "percent_change"])?;
        for (site, changes) in &self.condition_changes {
            for (attribute, percent) in changes {
                w.write_record([
                    "condition",
                    site.code(),
                    attribute.code(),
                    &percent.to_string(),
                ])?;
            }
        }
        for (condition, changes) in &self.site_changes {
            for (attribute, percent) in changes {
                w.write_record([
                    "site",
                    condition.code(),
                    attribute.code(),
                    &percent.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Plot-ready long format: one row per (record, attribute).
pub fn write_long_csv<W: Write>(records: &[SurveyRecord], out: W) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["participant_id", "site", "condition", "attribute", "value"])?;
    for record in records {
        for (attribute, value) in &record.attributes {
            w.write_record([
                record.participant_id.as_str(),
                record.site.code(),
                record.condition.code(),
                attribute.code(),
                &value.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Kendall tau-b between every pair of attributes across the records,
/// with Holm-adjusted p-values over the strict upper triangle. Attributes
/// that are constant across the records are left out (correlation against
/// them is undefined).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub attributes: Vec<Attribute>,
    pub tau: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub p_adjusted: Vec<Vec<f64>>,
}

pub fn correlation_matrix(records: &[SurveyRecord]) -> Result<CorrelationMatrix, AnalysisError> {
    if records.len() < 2 {
        return Err(AnalysisError::TooFewObservations {
            need: 2,
            got: records.len(),
        });
    }
    let attributes: Vec<Attribute> = Attribute::ALL
        .into_iter()
        .filter(|attribute| {
            let mut vals = records
                .iter()
                .filter_map(|r| r.attributes.get(attribute).copied());
            match vals.next() {
                None => false,
                Some(first) => vals.any(|v| v != first),
            }
        })
        .collect();

    let series: Vec<Vec<f64>> = attributes
        .iter()
        .map(|attribute| {
            records
                .iter()
                .map(|r| {
                    r.attributes.get(attribute).copied().ok_or_else(|| {
                        AnalysisError::Row {
                            row: 0,
                            message: format!("record lacks attribute '{attribute}'"),
                        }
                    })
                })
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;

    let k = attributes.len();
    let mut tau = vec![vec![1.0; k]; k];
    let mut p = vec![vec![0.0; k]; k];
    let mut upper = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            let (t, pv) = kendall_tau_b(&series[i], &series[j])?;
            tau[i][j] = t;
            tau[j][i] = t;
            p[i][j] = pv;
            p[j][i] = pv;
            upper.push(pv);
        }
    }
    let mut p_adjusted = vec![vec![0.0; k]; k];
    if !upper.is_empty() {
        let adjusted = holm_adjust(&upper)?;
        let mut it = adjusted.into_iter();
        for i in 0..k {
            for j in (i + 1)..k {
                let v = it.next().expect("same traversal order");
                p_adjusted[i][j] = v;
                p_adjusted[j][i] = v;
            }
        }
    }
    Ok(CorrelationMatrix {
        attributes,
        tau,
        p,
        p_adjusted,
    })
}

impl CorrelationMatrix {
    /// Long format: `attribute_a,attribute_b,tau,p,p_holm` for the strict
    /// upper triangle.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["attribute_a", "attribute_b", "tau", "p", "p_holm"])?;
        for i in 0..self.attributes.len() {
            for j in (i + 1)..self.attributes.len() {
                w.write_record([
                    self.attributes[i].code(),
                    self.attributes[j].code(),
                    &self.tau[i][j].to_string(),
                    &self.p[i][j].to_string(),
                    &self.p_adjusted[i][j].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn record(site: Site, condition: Condition, attrs: &[(Attribute, f64)]) -> SurveyRecord {
        SurveyRecord {
            participant_id: "p".into(),
            site,
            condition,
            attributes: attrs.iter().copied().collect(),
        }
    }

    #[test]
    fn single_record_cell_has_zero_sd() {
        let records = vec![record(
            Site::Gfp,
            Condition::Amb,
            &[(Attribute::Isopl, 0.25)],
        )];
        let table = contrast_table(&records);
        let stat = table.cells[&(Site::Gfp, Condition::Amb)][&Attribute::Isopl];
        assert_eq!(stat.n, 1);
        assert_eq!(stat.mean, 0.25);
        assert_eq!(stat.sd, 0.0);
        assert!(table.condition_changes.is_empty());
        assert!(table.site_changes.is_empty());
    }

    #[test]
    fn quoted_cell_means_reproduce_the_pleasantness_gain() {
        let records = vec![
            record(Site::Rtgp, Condition::Amb, &[(Attribute::Isopl, -0.191889)]),
            record(Site::Rtgp, Condition::Amss, &[(Attribute::Isopl, 0.0972768)]),
        ];
        let table = contrast_table(&records);
        let change = table.condition_changes[&Site::Rtgp][&Attribute::Isopl];
        assert_abs_diff_eq!(change, 14.45829, epsilon = 1e-4);
        assert_abs_diff_eq!(change, 14.5, epsilon = 0.2);
    }

    #[test]
    fn contrasts_cover_both_directions() {
        let mk = |site, condition, v: f64| {
            record(site, condition, &[(Attribute::Isopl, v), (Attribute::Pa, v / 2.0)])
        };
        let records = vec![
            mk(Site::Gfp, Condition::Amb, 0.0),
            mk(Site::Gfp, Condition::Amss, 0.2),
            mk(Site::Rtgp, Condition::Amb, -0.1),
            mk(Site::Rtgp, Condition::Amss, 0.3),
        ];
        let table = contrast_table(&records);
        assert_abs_diff_eq!(
            table.condition_changes[&Site::Gfp][&Attribute::Isopl],
            10.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            table.condition_changes[&Site::Rtgp][&Attribute::Isopl],
            20.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            table.site_changes[&Condition::Amb][&Attribute::Isopl],
            -5.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            table.site_changes[&Condition::Amss][&Attribute::Pa],
            2.5,
            epsilon = 1e-12
        );

        let mut csv = Vec::new();
        table.write_cells_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("site,condition,attribute,n,mean,sd\n"));
        assert!(text.contains("GFP,AMSS,isopl,1,0.2,0"));

        let mut csv = Vec::new();
        table.write_changes_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.contains("condition,RTGP,isopl,20"));
        assert!(text.contains("site,AMB,isopl,-5"));
    }

    #[test]
    fn empty_records_make_an_empty_table() {
        let table = contrast_table(&[]);
        assert!(table.cells.is_empty());
        assert!(table.condition_changes.is_empty());
        assert!(table.site_changes.is_empty());
    }

    #[test]
    fn correlation_matrix_drops_constant_attributes() {
        let records: Vec<SurveyRecord> = (0..8)
            .map(|i| {
                let v = f64::from(i) / 10.0;
                record(
                    Site::Gfp,
                    Condition::Amb,
                    &[
                        (Attribute::Isopl, v),
                        (Attribute::Pa, v * 0.5 - 0.2),
                        (Attribute::Na, -v),
                        (Attribute::Noi, 0.5),
                    ],
                )
            })
            .collect();
        let matrix = correlation_matrix(&records).unwrap();
        assert_eq!(
            matrix.attributes,
            vec![Attribute::Isopl, Attribute::Pa, Attribute::Na]
        );
        assert_abs_diff_eq!(matrix.tau[0][1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(matrix.tau[0][2], -1.0, epsilon = 1e-12);
        for i in 0..3 {
            assert_eq!(matrix.tau[i][i], 1.0);
            for j in 0..3 {
                assert!(matrix.p_adjusted[i][j] >= matrix.p[i][j] - 1e-15);
                assert!(matrix.p_adjusted[i][j] <= 1.0);
                assert_abs_diff_eq!(matrix.tau[i][j], matrix.tau[j][i], epsilon = 0.0);
            }
        }

        let mut csv = Vec::new();
        matrix.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("attribute_a,attribute_b,tau,p,p_holm\n"));
        assert_eq!(text.lines().count(), 1 + 3);
    }

    #[test]
    fn correlation_needs_at_least_two_records() {
        assert!(matches!(
            correlation_matrix(&[]),
            Err(AnalysisError::TooFewObservations { .. })
        ));
    }
}

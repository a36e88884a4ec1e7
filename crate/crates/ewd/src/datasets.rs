//! Dataset ingestion and type II censoring.
//!
//! CSV input accepts an optional header and a configurable delimiter; a
//! column may be picked by name or index. The two benchmark datasets
//! (ball-bearings lifetimes, carbon-fibre breaking stress) ship as
//! fixtures under `data/` and are embedded here for offline use.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{EwdError, Result};
use crate::likelihood::CensoredSample;

/// A named list of positive lifetimes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub values: Vec<f64>,
    pub source: String,
}

/// Which CSV column holds the lifetimes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    /// Single-column file, or the first column.
    First,
    Index(usize),
    Name(String),
}

/// Rounding rule converting a censoring rate into an integer `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    Floor,
    Round,
    Ceil,
}

impl Rounding {
    pub fn apply(self, v: f64) -> usize {
        match self {
            Rounding::Floor => v.floor() as usize,
            Rounding::Round => v.round() as usize,
            Rounding::Ceil => v.ceil() as usize,
        }
    }
}

impl std::str::FromStr for Rounding {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "floor" => Ok(Rounding::Floor),
            "round" => Ok(Rounding::Round),
            "ceil" => Ok(Rounding::Ceil),
            other => Err(format!("unknown rounding rule '{other}'")),
        }
    }
}

/// Censoring specification: an explicit observation count or a rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CensorSpec {
    Count(usize),
    Rate { c: f64, rounding: Rounding },
}

impl Dataset {
    pub fn new(name: impl Into<String>, values: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(EwdError::InvalidData("dataset is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v <= 0.0) {
            return Err(EwdError::InvalidData(format!(
                "value {} at position {} is not a positive lifetime",
                values[i],
                i + 1
            )));
        }
        Ok(Self {
            name: name.into(),
            values,
            source: source.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// The full sample, sorted, with no censoring.
    pub fn complete_sample(&self) -> CensoredSample {
        self.censor(CensorSpec::Count(self.n()))
            .expect("complete sample of a valid dataset")
    }

    /// Apply type II censoring: sort ascending (stable, so ties keep input
    /// order) and keep the first `r` order statistics.
    pub fn censor(&self, spec: CensorSpec) -> Result<CensoredSample> {
        let n = self.n();
        let r = match spec {
            CensorSpec::Count(r) => r,
            CensorSpec::Rate { c, rounding } => {
                if !(0.0..1.0).contains(&c) {
                    return Err(EwdError::Domain(format!(
                        "censoring rate must lie in [0,1), got {c}"
                    )));
                }
                rounding.apply(n as f64 * (1.0 - c)).clamp(1, n)
            }
        };
        if r == 0 || r > n {
            return Err(EwdError::Domain(format!(
                "r = {r} out of range for n = {n}"
            )));
        }
        let mut sorted = self.values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("validated finite values"));
        sorted.truncate(r);
        CensoredSample::new(sorted, n)
    }
}

/// Convenience alias keeping the operation name close to its description.
pub fn apply_type2_censoring(data: &Dataset, spec: CensorSpec) -> Result<CensoredSample> {
    data.censor(spec)
}

/// Parse a dataset from CSV text. Header rows are detected by attempting
/// to parse the selected field of the first record.
pub fn parse_csv(
    name: &str,
    text: &str,
    column: &ColumnSelector,
    delimiter: u8,
) -> Result<Dataset> {
    let mut header: Option<Vec<String>> = None;
    let mut values = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let row = line_no + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(delimiter as char)
            .map(|f| f.trim())
            .collect();
        let idx = match column {
            ColumnSelector::First => 0,
            ColumnSelector::Index(i) => *i,
            ColumnSelector::Name(name) => match &header {
                Some(h) => h
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| EwdError::Io(format!("no column named '{name}'")))?,
                None => {
                    // first row must then be the header
                    header = Some(fields.iter().map(|s| s.to_string()).collect());
                    continue;
                }
            },
        };
        let field = fields.get(idx).ok_or_else(|| {
            EwdError::Io(format!("row {row}: missing column {idx}"))
        })?;
        match field.parse::<f64>() {
            Ok(v) => {
                if !v.is_finite() || v <= 0.0 {
                    return Err(EwdError::Io(format!(
                        "row {row}: lifetime must be positive, got {field}"
                    )));
                }
                values.push(v);
            }
            Err(_) if values.is_empty() && header.is_none() => {
                // unparseable first record: treat as header
                header = Some(fields.iter().map(|s| s.to_string()).collect());
            }
            Err(_) => {
                return Err(EwdError::Io(format!(
                    "row {row}: cannot parse '{field}' as a number"
                )));
            }
        }
    }
    Dataset::new(name, values, "loaded from CSV")
}

/// Load a dataset from a CSV file.
pub fn load_csv(path: impl AsRef<Path>, column: &ColumnSelector, delimiter: u8) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| EwdError::Io(format!("{}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    parse_csv(&name, &text, column, delimiter)
}

const BALL_BEARINGS_CSV: &str = include_str!("../../../data/ballbearings.csv");
const CARBON_FIBRES_CSV: &str = include_str!("../../../data/carbon_fibres.csv");

/// Ball-bearings fatigue lifetimes (millions of revolutions), n = 23.
pub fn ball_bearings() -> Dataset {
    let mut d = parse_csv(
        "ball-bearings",
        BALL_BEARINGS_CSV,
        &ColumnSelector::First,
        b',',
    )
    .expect("embedded fixture is valid");
    d.source = "Lieblein & Zelen (1956); Gupta & Kundu (2001)".into();
    d
}

/// Carbon-fibre breaking stress (GPa), n = 100.
pub fn carbon_fibres() -> Dataset {
    let mut d = parse_csv(
        "carbon-fibres",
        CARBON_FIBRES_CSV,
        &ColumnSelector::First,
        b',',
    )
    .expect("embedded fixture is valid");
    d.source = "Nichols & Padgett (2006)".into();
    d
}

//! Death-certificate records, JSON Lines ingestion and chronological
//! splitting.

use std::collections::HashSet;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Record {
    pub id: String,
    pub date_of_death: NaiveDate,
    pub cause_text: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    date_of_death: String,
    cause_text: String,
}

/// Parse a full `YYYY-MM-DD` date. Partial dates are rejected.
pub fn parse_date(s: &str) -> Result<NaiveDate, String> {
    let b = s.as_bytes();
    let shape_ok = b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b
            .iter()
            .enumerate()
            .all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit());
    if !shape_ok {
        return Err(format!("date {s:?} is not YYYY-MM-DD"));
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("date {s:?}: {e}"))
}

impl Record {
    pub fn new(id: impl Into<String>, date_of_death: NaiveDate, cause_text: impl Into<String>) -> Self {
        Record {
            id: id.into(),
            date_of_death,
            cause_text: cause_text.into(),
        }
    }

    /// Build a record from certificate lines, joined with single spaces.
    pub fn from_lines<I, S>(id: impl Into<String>, date_of_death: NaiveDate, lines: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let parts: Vec<String> = lines
            .into_iter()
            .map(|l| l.as_ref().trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        Record::new(id, date_of_death, parts.join(" "))
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&RawRecord {
            id: self.id.clone(),
            date_of_death: self.date_of_death.format("%Y-%m-%d").to_string(),
            cause_text: self.cause_text.clone(),
        })
        .expect("string fields always serialize")
    }
}

pub fn parse_records(text: &str) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            context: "records".into(),
            line: lineno,
            message,
        };
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if raw.id.is_empty() {
            return Err(err("empty id".into()));
        }
        let date_of_death = parse_date(&raw.date_of_death).map_err(err)?;
        if !seen.insert(raw.id.clone()) {
            return Err(Error::DuplicateId(raw.id));
        }
        out.push(Record {
            id: raw.id,
            date_of_death,
            cause_text: raw.cause_text,
        });
    }
    Ok(out)
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<Record>> {
    let path = path.as_ref();
    let text = crate::io::read_to_string(path)?;
    parse_records(&text).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            context: path.display().to_string(),
            line,
            message,
        },
        other => other,
    })
}

pub fn render_records(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_json_line());
        out.push('\n');
    }
    out
}

pub fn save_records(path: impl AsRef<Path>, records: &[Record]) -> Result<()> {
    crate::io::write_atomic(path, render_records(records).as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitSpec {
    /// Train/validation/test fractions; sizes are floor, floor, remainder.
    Ratios([f64; 3]),
    /// Exact train/validation/test sizes.
    Counts([usize; 3]),
}

impl SplitSpec {
    pub const DEFAULT_RATIOS: SplitSpec = SplitSpec::Ratios([0.75, 0.10, 0.15]);

    /// Partition sizes for a corpus of `n` records.
    pub fn sizes(&self, n: usize) -> Result<[usize; 3]> {
        match *self {
            SplitSpec::Counts(c) => {
                let sum: usize = c.iter().sum();
                if sum != n {
                    return Err(Error::Split(format!(
                        "counts {}+{}+{} = {sum} do not sum to corpus size {n}",
                        c[0], c[1], c[2]
                    )));
                }
                Ok(c)
            }
            SplitSpec::Ratios(r) => {
                if r.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::Split(format!("ratios {r:?} must be finite and non-negative")));
                }
                let sum: f64 = r.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::Split(format!("ratios {r:?} sum to {sum}, not 1")));
                }
                // Tolerance keeps products like 100 * 0.29 from flooring one short.
                let floor = |x: f64| ((n as f64 * x) + 1e-9).floor() as usize;
                let train = floor(r[0]).min(n);
                let validation = floor(r[1]).min(n - train);
                Ok([train, validation, n - train - validation])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub train: Vec<Record>,
    pub validation: Vec<Record>,
    pub test: Vec<Record>,
}

/// Sort by (date of death, id) and cut into train/validation/test blocks.
pub fn chronological_split(records: &[Record], spec: &SplitSpec) -> Result<Split> {
    let [train_n, val_n, _] = spec.sizes(records.len())?;
    let mut sorted: Vec<Record> = records.to_vec();
    sorted.sort_by(|a, b| {
        a.date_of_death
            .cmp(&b.date_of_death)
            .then_with(|| a.id.cmp(&b.id))
    });
    let test = sorted.split_off(train_n + val_n);
    let validation = sorted.split_off(train_n);
    Ok(Split {
        train: sorted,
        validation,
        test,
    })
}

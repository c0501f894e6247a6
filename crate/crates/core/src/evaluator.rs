//! Exact-span entity scoring.
//!
//! A predicted span counts as a true positive only if a gold span in the
//! same record has the same start and end; partial overlaps are one false
//! positive plus one false negative.
//!
//! Zero denominators: PPV is 100 when nothing was predicted and nothing
//! was missed, else 0; sensitivity is 100 when there is no gold entity
//! and no false positive, else 0; F1 is 0 when both are 0.

use std::collections::HashSet;

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::bilou::{align, decode, Span, TaggedSequence};
use crate::error::{Error, Result};

/// A percentage held as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Percent(Ratio<u128>);

impl Percent {
    pub const HUNDRED: Percent = Percent(Ratio::new_raw(100, 1));
    pub const ZERO: Percent = Percent(Ratio::new_raw(0, 1));

    /// `100 * num / den`; `den` must be non-zero.
    fn of(num: u64, den: u64) -> Self {
        Percent(Ratio::new(100 * num as u128, den as u128))
    }

    pub fn ratio(&self) -> Ratio<u128> {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// Rounded half-up to two decimals, in hundredths of a percent.
    pub fn hundredths(&self) -> u128 {
        let (n, d) = (*self.0.numer(), *self.0.denom());
        (200 * n + d) / (2 * d)
    }

    /// Rounded half-up to two decimals.
    pub fn rounded(&self) -> f64 {
        self.hundredths() as f64 / 100.0
    }

    /// Two-decimal display string, e.g. `"99.13"`.
    pub fn display(&self) -> String {
        let h = self.hundredths();
        format!("{}.{:02}", h / 100, h % 100)
    }

    fn harmonic_mean(a: Percent, b: Percent) -> Percent {
        let sum = a.0 + b.0;
        if sum.is_zero() {
            Percent::ZERO
        } else {
            Percent(Ratio::from_integer(2) * a.0 * b.0 / sum)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Metrics {
    pub ppv: Percent,
    pub sensitivity: Percent,
    pub f1: Percent,
}

/// PPV, sensitivity and F1 from span counts.
pub fn metrics(tp: u64, fp: u64, fn_: u64) -> Metrics {
    let ppv = if tp + fp == 0 {
        if fn_ == 0 { Percent::HUNDRED } else { Percent::ZERO }
    } else {
        Percent::of(tp, tp + fp)
    };
    let sensitivity = if tp + fn_ == 0 {
        if fp == 0 { Percent::HUNDRED } else { Percent::ZERO }
    } else {
        Percent::of(tp, tp + fn_)
    };
    Metrics {
        ppv,
        sensitivity,
        f1: Percent::harmonic_mean(ppv, sensitivity),
    }
}

/// Signed-input variant of [`metrics`]; negative counts are rejected.
pub fn metrics_from_counts(tp: i64, fp: i64, fn_: i64) -> Result<Metrics> {
    let conv = |name: &str, x: i64| {
        u64::try_from(x).map_err(|_| Error::Empty(format!("{name} count {x} is negative")))
    };
    Ok(metrics(conv("tp", tp)?, conv("fp", fp)?, conv("fn", fn_)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordScore {
    pub record_id: String,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub ppv: f64,
    pub sensitivity: f64,
    pub f1: f64,
    pub ppv_exact: f64,
    pub sensitivity_exact: f64,
    pub f1_exact: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_record: Option<Vec<RecordScore>>,
}

impl EvalReport {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let m = metrics(tp, fp, fn_);
        EvalReport {
            tp,
            fp,
            fn_,
            ppv: m.ppv.rounded(),
            sensitivity: m.sensitivity.rounded(),
            f1: m.f1.rounded(),
            ppv_exact: m.ppv.to_f64(),
            sensitivity_exact: m.sensitivity.to_f64(),
            f1_exact: m.f1.to_f64(),
            per_record: None,
        }
    }

    pub fn metrics(&self) -> Metrics {
        metrics(self.tp, self.fp, self.fn_)
    }

    /// One line in the layout of a results table row.
    pub fn table_row(&self, name: &str) -> String {
        let m = self.metrics();
        format!(
            "{name}\t{}\t{}\t{}\t{}%\t{}%\t{}%",
            self.tp,
            self.fp,
            self.fn_,
            m.ppv.display(),
            m.sensitivity.display(),
            m.f1.display()
        )
    }
}

/// Exact-span match counts for one record.
pub fn span_counts(gold: &[Span], predicted: &[Span]) -> (u64, u64, u64) {
    let gold_set: HashSet<&Span> = gold.iter().collect();
    let tp = predicted.iter().filter(|s| gold_set.contains(s)).count() as u64;
    (tp, predicted.len() as u64 - tp, gold.len() as u64 - tp)
}

/// Score predictions against gold. Records are paired by id.
pub fn score(gold: &[TaggedSequence], predicted: &[TaggedSequence]) -> Result<EvalReport> {
    let pairs = align(gold, predicted)?;
    let mut per_record = Vec::with_capacity(pairs.len());
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (g, p) in pairs {
        let (a, b, c) = span_counts(&decode(&g.tags), &decode(&p.tags));
        tp += a;
        fp += b;
        fn_ += c;
        per_record.push(RecordScore {
            record_id: g.record_id.clone(),
            tp: a,
            fp: b,
            fn_: c,
        });
    }
    let mut report = EvalReport::from_counts(tp, fp, fn_);
    report.per_record = Some(per_record);
    Ok(report)
}

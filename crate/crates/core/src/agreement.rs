//! Token-level Cohen's kappa between two annotations of the same corpus.

use serde::{Deserialize, Serialize};

use crate::bilou::{align, Tag, TaggedSequence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub record_id: String,
    pub token_index: usize,
    pub tag_a: Tag,
    pub tag_b: Tag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub kappa: f64,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    pub n_tokens: usize,
    /// Set when expected agreement is 1 (both annotators used one and the
    /// same category throughout); kappa is then reported as 1.0.
    pub degenerate: bool,
    pub disagreements: Vec<Disagreement>,
}

/// Pooled token-level kappa over the five BILOU tag categories.
pub fn kappa(a: &[TaggedSequence], b: &[TaggedSequence]) -> Result<AgreementReport> {
    let pairs = align(a, b)?;
    let k = Tag::ALL.len();
    let mut marg_a = vec![0usize; k];
    let mut marg_b = vec![0usize; k];
    let mut agree = 0usize;
    let mut n = 0usize;
    let mut disagreements = Vec::new();
    for (x, y) in pairs {
        for (i, (&ta, &tb)) in x.tags.iter().zip(&y.tags).enumerate() {
            n += 1;
            marg_a[ta.index()] += 1;
            marg_b[tb.index()] += 1;
            if ta == tb {
                agree += 1;
            } else {
                disagreements.push(Disagreement {
                    record_id: x.record_id.clone(),
                    token_index: i,
                    tag_a: ta,
                    tag_b: tb,
                });
            }
        }
    }
    if n == 0 {
        return Err(Error::Empty("kappa needs at least one token".into()));
    }
    let nf = n as f64;
    let po = agree as f64 / nf;
    let pe: f64 = marg_a
        .iter()
        .zip(&marg_b)
        .map(|(&ca, &cb)| (ca as f64 / nf) * (cb as f64 / nf))
        .sum();
    // pe is exactly 1 only when both marginals put all mass on one category.
    let degenerate = marg_a.iter().zip(&marg_b).any(|(&ca, &cb)| ca == n && cb == n);
    let kappa = if degenerate { 1.0 } else { (po - pe) / (1.0 - pe) };
    Ok(AgreementReport {
        kappa,
        observed_agreement: po,
        expected_agreement: pe,
        n_tokens: n,
        degenerate,
        disagreements,
    })
}

/// Positions where the two annotations differ, in the order of `a`.
pub fn disagreements(a: &[TaggedSequence], b: &[TaggedSequence]) -> Result<Vec<Disagreement>> {
    let pairs = align(a, b)?;
    Ok(pairs
        .into_iter()
        .flat_map(|(x, y)| {
            x.tags
                .iter()
                .zip(&y.tags)
                .enumerate()
                .filter(|(_, (ta, tb))| ta != tb)
                .map(|(i, (&ta, &tb))| Disagreement {
                    record_id: x.record_id.clone(),
                    token_index: i,
                    tag_a: ta,
                    tag_b: tb,
                })
        })
        .collect())
}

/// TSV with columns record_id, index, tag_a, tag_b.
pub fn disagreements_tsv(rows: &[Disagreement]) -> String {
    let mut out = String::from("record_id\tindex\ttag_a\ttag_b\n");
    for d in rows {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", d.record_id, d.token_index, d.tag_a, d.tag_b));
    }
    out
}

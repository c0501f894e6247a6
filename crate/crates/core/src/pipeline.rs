//! Consolidated comparison of the CRF and lookup taggers on one corpus.

use serde::{Deserialize, Serialize};

use crate::bilou::TaggedSequence;
use crate::corpus::{chronological_split, Record, SplitSpec};
use crate::crf::{predict_corpus, train, CrfModel, TrainConfig};
use crate::enrichment::{enrich, EnrichmentReport};
use crate::error::{Error, Result};
use crate::evaluator::{score, EvalReport};
use crate::lookup::{tag_corpus, LookupTable};
use crate::synth::{generate, SynthConfig, SynthCorpus};

/// Inputs to [`pipeline_report`]. Any stage may be missing.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageOutputs<'a> {
    pub gold: Option<&'a [TaggedSequence]>,
    pub crf: Option<&'a [TaggedSequence]>,
    pub lookup: Option<&'a [TaggedSequence]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub crf: EvalReport,
    pub lookup: EvalReport,
    pub enrichment: EnrichmentReport,
}

impl PipelineReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Tab-separated rows: method, TP, FP, FN, PPV, sensitivity, F1.
    pub fn table(&self) -> String {
        format!("{}\n{}\n", self.crf.table_row("crf"), self.lookup.table_row("lookup"))
    }
}

/// Score both methods against gold and compare them for enrichment.
/// Per-record counts are left out of the consolidated report.
pub fn pipeline_report(stages: StageOutputs<'_>, table: &LookupTable) -> Result<PipelineReport> {
    let missing = |stage: &str| Error::MissingStage(stage.to_string());
    let gold = stages.gold.ok_or_else(|| missing("gold"))?;
    let crf = stages.crf.ok_or_else(|| missing("crf"))?;
    let lookup = stages.lookup.ok_or_else(|| missing("lookup"))?;
    let mut crf_report = score(gold, crf)?;
    crf_report.per_record = None;
    let mut lookup_report = score(gold, lookup)?;
    lookup_report.per_record = None;
    Ok(PipelineReport {
        crf: crf_report,
        lookup: lookup_report,
        enrichment: enrich(crf, lookup, table)?,
    })
}

/// Everything produced by [`run_synthetic`].
#[derive(Debug, Clone)]
pub struct SyntheticRun {
    pub corpus: SynthCorpus,
    pub train: Vec<TaggedSequence>,
    pub validation: Vec<TaggedSequence>,
    pub test: Vec<TaggedSequence>,
    pub model: CrfModel<f64>,
    pub crf_pred: Vec<TaggedSequence>,
    pub lookup_pred: Vec<TaggedSequence>,
    pub report: PipelineReport,
}

/// Generate a corpus, split it by date, train on the first block and
/// report both methods on the test block.
pub fn run_synthetic(synth: &SynthConfig, split: &SplitSpec, training: &TrainConfig) -> Result<SyntheticRun> {
    let corpus = generate(synth)?;
    let parts = chronological_split(&corpus.records, split)?;
    let gold_of = |records: &[Record]| -> Vec<TaggedSequence> {
        records
            .iter()
            .map(|r| {
                corpus
                    .gold
                    .iter()
                    .find(|g| g.record_id == r.id)
                    .expect("every record has gold")
                    .clone()
            })
            .collect()
    };
    let train_set = gold_of(&parts.train);
    let validation = gold_of(&parts.validation);
    let test = gold_of(&parts.test);
    let model = train::<f64>(&train_set, training)?;
    let crf_pred = predict_corpus(&model, &test);
    let lookup_pred = tag_corpus(&test, &synth.table)?;
    let report = pipeline_report(
        StageOutputs {
            gold: Some(&test),
            crf: Some(&crf_pred),
            lookup: Some(&lookup_pred),
        },
        &synth.table,
    )?;
    Ok(SyntheticRun {
        corpus,
        train: train_set,
        validation,
        test,
        model,
        crf_pred,
        lookup_pred,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::tokenize;

    fn seq(id: &str, text: &str, spans: &[crate::Span]) -> TaggedSequence {
        let tokens = tokenize(text);
        let tags = crate::bilou::encode(tokens.len(), spans).unwrap();
        TaggedSequence::new(id, tokens, tags).unwrap()
    }

    #[test]
    fn missing_stage_is_named() {
        let g = vec![seq("1", "HEROIN TOXICITY", &[crate::Span::new(0, 0)])];
        let table = LookupTable::builtin();
        let err = pipeline_report(
            StageOutputs {
                gold: Some(&g),
                crf: Some(&g),
                lookup: None,
            },
            &table,
        )
        .unwrap_err();
        assert!(err.to_string().contains("lookup"), "{err}");
        let err = pipeline_report(StageOutputs::default(), &table).unwrap_err();
        assert!(err.to_string().contains("gold"));
    }

    #[test]
    fn report_has_both_rows() {
        let g = vec![seq("1", "HEROIN AND FENTANYLL TOXICITY", &[crate::Span::new(0, 0), crate::Span::new(2, 2)])];
        let table = LookupTable::builtin();
        let lk = tag_corpus(&g, &table).unwrap();
        let r = pipeline_report(
            StageOutputs {
                gold: Some(&g),
                crf: Some(&g),
                lookup: Some(&lk),
            },
            &table,
        )
        .unwrap();
        assert_eq!((r.crf.tp, r.crf.fp, r.crf.fn_), (2, 0, 0));
        assert_eq!((r.lookup.tp, r.lookup.fp, r.lookup.fn_), (1, 0, 1));
        assert_eq!(r.enrichment.candidates[0].surface, "FENTANYLL");
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for row in ["crf", "lookup"] {
            for k in ["tp", "fp", "fn", "ppv", "sensitivity", "f1"] {
                assert!(v[row].get(k).is_some(), "{row}.{k}");
            }
        }
    }
}

//! Dictionary enrichment: drug mentions found by a model but not by the
//! lookup table, turned into candidate table rows for review.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::bilou::{align, decode, EntitySpan, Span, TaggedSequence};
use crate::error::Result;
use crate::lookup::LookupTable;
use crate::tokenizer::Token;

/// How many record ids to keep per candidate.
pub const MAX_EXAMPLE_IDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub record_id: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub surface: String,
    pub count: usize,
    pub example_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EnrichmentReport {
    pub candidates: Vec<Candidate>,
    pub model_only_instances: usize,
    pub lookup_only_instances: usize,
    pub unique_candidate_count: usize,
    pub model_only: Vec<Instance>,
    pub lookup_only: Vec<Instance>,
}

fn instances(id: &str, tokens: &[Token], spans: impl Iterator<Item = Span>) -> Vec<Instance> {
    spans
        .map(|s| {
            let e = EntitySpan::from_span(s, tokens);
            Instance {
                record_id: id.to_string(),
                start: e.start,
                end: e.end,
                surface: e.surface,
            }
        })
        .collect()
}

/// Compare model and lookup predictions span by span.
pub fn enrich(
    model_pred: &[TaggedSequence],
    lookup_pred: &[TaggedSequence],
    table: &LookupTable,
) -> Result<EnrichmentReport> {
    let pairs = align(model_pred, lookup_pred)?;
    let mut model_only = Vec::new();
    let mut lookup_only = Vec::new();
    let mut by_surface: BTreeMap<String, Candidate> = BTreeMap::new();
    for (m, l) in pairs {
        let ms = decode(&m.tags);
        let ls = decode(&l.tags);
        let mset: HashSet<Span> = ms.iter().copied().collect();
        let lset: HashSet<Span> = ls.iter().copied().collect();
        let only_m = instances(&m.record_id, &m.tokens, ms.iter().copied().filter(|s| !lset.contains(s)));
        lookup_only.extend(instances(
            &l.record_id,
            &l.tokens,
            ls.iter().copied().filter(|s| !mset.contains(s)),
        ));
        for inst in &only_m {
            let key: Vec<&str> = m.tokens[inst.start..=inst.end].iter().map(Token::as_str).collect();
            if table.contains_key(&key) {
                continue;
            }
            let c = by_surface.entry(inst.surface.clone()).or_insert_with(|| Candidate {
                surface: inst.surface.clone(),
                count: 0,
                example_ids: Vec::new(),
            });
            c.count += 1;
            if c.example_ids.len() < MAX_EXAMPLE_IDS && !c.example_ids.contains(&inst.record_id) {
                c.example_ids.push(inst.record_id.clone());
            }
        }
        model_only.extend(only_m);
    }
    let mut candidates: Vec<Candidate> = by_surface.into_values().collect();
    candidates.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.surface.cmp(&b.surface)));
    Ok(EnrichmentReport {
        unique_candidate_count: candidates.len(),
        candidates,
        model_only_instances: model_only.len(),
        lookup_only_instances: lookup_only.len(),
        model_only,
        lookup_only,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchRow {
    pub term: String,
    /// Empty until a reviewer fills it in, unless a hint supplied it.
    pub referent: String,
}

/// One lookup-table row per candidate. Referents come from `hints` when
/// present and are left empty otherwise.
pub fn emit_table_patch(report: &EnrichmentReport, hints: Option<&BTreeMap<String, String>>) -> Vec<PatchRow> {
    report
        .candidates
        .iter()
        .map(|c| PatchRow {
            term: c.surface.clone(),
            referent: hints
                .and_then(|h| h.get(&c.surface))
                .cloned()
                .unwrap_or_default(),
        })
        .collect()
}

/// Patch rows in lookup-table TSV format, header included.
pub fn render_patch(rows: &[PatchRow]) -> String {
    let mut out = String::from("SEARCH_TERM\tREFERENT\n");
    for r in rows {
        out.push_str(&format!("{}\t{}\n", r.term, r.referent));
    }
    out
}

pub fn render_candidates(report: &EnrichmentReport) -> String {
    let mut out = String::from("SURFACE_FORM\tCOUNT\tEXAMPLE_IDS\n");
    for c in &report.candidates {
        out.push_str(&format!("{}\t{}\t{}\n", c.surface, c.count, c.example_ids.join(";")));
    }
    out
}

/// Add patch rows to `table`, skipping terms it already has. Returns the
/// number of rows added.
pub fn apply_patch(table: &mut LookupTable, rows: &[PatchRow]) -> Result<usize> {
    let mut added = 0;
    for r in rows {
        if table.contains_surface(&r.term) {
            continue;
        }
        table.insert(&r.term, &r.referent)?;
        added += 1;
    }
    Ok(added)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilou::{encode, Tag};
    use crate::lookup::tag_corpus;
    use crate::tokenizer::tokenize;

    fn seq(id: &str, text: &str, spans: &[(usize, usize)]) -> TaggedSequence {
        let toks = tokenize(text);
        let spans: Vec<Span> = spans.iter().map(|&(s, e)| Span::new(s, e)).collect();
        let tags = encode(toks.len(), &spans).unwrap();
        TaggedSequence::new(id, toks, tags).unwrap()
    }

    fn table(terms: &[&str]) -> LookupTable {
        let mut t = LookupTable::new("t");
        for term in terms {
            t.insert(term, "").unwrap();
        }
        t
    }

    #[test]
    fn designer_opioids() {
        let t = table(&["OPIOIDS"]);
        let model = vec![seq("r1", "DESIGNER OPIOIDS TOXICITY", &[(0, 1)])];
        let lookup = tag_corpus(&model, &t).unwrap();
        let r = enrich(&model, &lookup, &t).unwrap();
        assert_eq!(r.candidates.len(), 1);
        assert_eq!(r.candidates[0].surface, "DESIGNER OPIOIDS");
        assert_eq!((r.model_only_instances, r.lookup_only_instances), (1, 1));
    }

    #[test]
    fn identical_predictions() {
        let t = table(&["HEROIN"]);
        let s = vec![seq("r1", "HEROIN AND X", &[(0, 0), (2, 2)])];
        let r = enrich(&s, &s, &t).unwrap();
        assert!(r.candidates.is_empty());
        assert_eq!((r.model_only_instances, r.lookup_only_instances), (0, 0));
        assert!(emit_table_patch(&r, None).is_empty());
    }

    #[test]
    fn candidate_ordering_and_ids() {
        let t = table(&["HEROIN"]);
        let model = vec![
            seq("a", "FENTANL AND ALPRAZOLM", &[(0, 0), (2, 2)]),
            seq("b", "FENTANL", &[(0, 0)]),
            seq("c", "HEROIN", &[(0, 0)]),
        ];
        let lookup: Vec<_> = model.iter().map(|s| TaggedSequence::untagged(&s.record_id, s.tokens.clone())).collect();
        let r = enrich(&model, &lookup, &t).unwrap();
        let got: Vec<(&str, usize)> = r.candidates.iter().map(|c| (c.surface.as_str(), c.count)).collect();
        assert_eq!(got, [("FENTANL", 2), ("ALPRAZOLM", 1)]);
        assert_eq!(r.candidates[0].example_ids, ["a", "b"]);
        // HEROIN is model-only here but already a key.
        assert_eq!(r.model_only_instances, 4);
        assert_eq!(render_candidates(&r).lines().nth(1), Some("FENTANL\t2\ta;b"));
    }

    #[test]
    fn patch_with_hint_and_fixed_point() {
        let mut t = table(&["OXYMORPHONE"]);
        let model = vec![seq("a", "OXMORPHONE INTOXICATION", &[(0, 0)])];
        let lookup = tag_corpus(&model, &t).unwrap();
        let r = enrich(&model, &lookup, &t).unwrap();
        let hints: BTreeMap<String, String> = [("OXMORPHONE".to_string(), "OXYMORPHONE".to_string())].into();
        let rows = emit_table_patch(&r, Some(&hints));
        assert_eq!(render_patch(&rows), "SEARCH_TERM\tREFERENT\nOXMORPHONE\tOXYMORPHONE\n");
        assert_eq!(apply_patch(&mut t, &rows).unwrap(), 1);
        assert_eq!(apply_patch(&mut t, &rows).unwrap(), 0);
        assert_eq!(t.referent(&["OXMORPHONE"]), Some("OXYMORPHONE"));
        let again = enrich(&model, &tag_corpus(&model, &t).unwrap(), &t).unwrap();
        assert!(again.candidates.is_empty());
    }

    #[test]
    fn hyphenated_surface_forms() {
        let t = table(&["HEROIN"]);
        let model = vec![seq("a", "1,1-DIFLUOROETHANE TOXICITY", &[(0, 4)])];
        let lookup = vec![TaggedSequence::untagged("a", model[0].tokens.clone())];
        let r = enrich(&model, &lookup, &t).unwrap();
        assert_eq!(r.candidates[0].surface, "1,1-DIFLUOROETHANE");
        let mut t2 = t.clone();
        apply_patch(&mut t2, &emit_table_patch(&r, None)).unwrap();
        assert!(t2.contains_key(&["1", ",", "1", "-", "DIFLUOROETHANE"]));
        assert_eq!(model[0].tags[0], Tag::B_DRUG);
    }
}

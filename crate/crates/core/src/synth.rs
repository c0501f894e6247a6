//! Seeded synthetic death-certificate corpus.
//!
//! Records instantiate cause-of-death templates whose `{DRUG}` slots take
//! one drug term and whose `{DRUGS}` slots take a list. Drug terms come
//! from a lookup table, so the lookup baseline can be scored against gold
//! on the generated text. A fraction of the vocabulary is held out and
//! only used in the chronologically last records.

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bilou::{encode, Span, TaggedSequence};
use crate::corpus::Record;
use crate::error::{Error, Result};
use crate::lookup::{find_matches, LookupTable};
use crate::tokenizer::{detokenize, tokenize, Token};

pub const DRUG_SLOT: &str = "{DRUG}";
pub const LIST_SLOT: &str = "{DRUGS}";

pub const DEFAULT_TEMPLATES: &[&str] = &[
    "ACUTE INTOXICATION BY THE COMBINED EFFECTS OF {DRUGS}",
    "MULTIPLE DRUG INTOXICATION ({DRUGS}) MULTIPLE DRUG INTOXICATION",
    "ACUTE COMBINED TOXIC EFFECTS OF [{DRUGS}] SELF ADMINISTRATION OF ILLICIT DRUGS",
    "{DRUG} TOXICITY",
    "ACUTE {DRUG} INTOXICATION",
    "MIXED DRUG TOXICITY INCLUDING {DRUGS}",
    "COMPLICATIONS OF CHRONIC {DRUG} ABUSE",
    "{DRUGS} OVERDOSE",
    "COMBINED {DRUGS} TOXICITY",
    "TOXIC EFFECTS OF {DRUGS}",
    "{DRUGS} PRESENT",
    "ACUTE {DRUG} AND {DRUG} INTOXICATION",
];

/// Contributing conditions occasionally appended after a semicolon.
pub const DEFAULT_CLAUSES: &[&str] = &[
    "HYPERTENSIVE CARDIOVASCULAR DISEASE",
    "CHRONIC OBSTRUCTIVE PULMONARY DISEASE",
    "ATHEROSCLEROTIC CARDIOVASCULAR DISEASE",
    "OBESITY",
    "CIRRHOSIS OF LIVER",
    "HEPATITIS C INFECTION",
    "PNEUMONIA",
    "BLUNT FORCE INJURIES OF HEAD",
    "ASPIRATION OF GASTRIC CONTENTS",
    "HISTORY OF INTRAVENOUS DRUG ABUSE",
    "CHRONIC KIDNEY DISEASE DUE TO DIABETES MELLITUS",
];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_records: usize,
    pub table: LookupTable,
    /// Fraction of drug mentions replaced by a misspelling.
    pub misspell_rate: f64,
    /// Fraction of the vocabulary used only in the last `test_fraction`
    /// of records.
    pub holdout_terms: f64,
    pub test_fraction: f64,
    pub templates: Vec<String>,
    pub clauses: Vec<String>,
    /// Probability of appending each further contributing-condition clause.
    pub clause_rate: f64,
    pub max_clauses: usize,
    /// Upper bound on drug mentions per record (at most 5).
    pub max_drugs: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
}

impl SynthConfig {
    pub fn new(seed: u64, n_records: usize, table: LookupTable) -> Self {
        SynthSettings {
            seed,
            n_records,
            ..SynthSettings::default()
        }
        .into_config(table)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Synth(m));
        for (name, x) in [
            ("misspell_rate", self.misspell_rate),
            ("holdout_terms", self.holdout_terms),
            ("test_fraction", self.test_fraction),
            ("clause_rate", self.clause_rate),
        ] {
            if !(0.0..=1.0).contains(&x) {
                return bad(format!("{name} = {x} is outside [0, 1]"));
            }
        }
        if self.n_records == 0 {
            return bad("n_records must be at least 1".into());
        }
        if !(1..=5).contains(&self.max_drugs) {
            return bad("max_drugs must be between 1 and 5".into());
        }
        if self.templates.is_empty() {
            return bad("no templates".into());
        }
        if self.table.is_empty() {
            return bad("drug vocabulary is empty".into());
        }
        if self.end_date < self.start_date {
            return bad("end_date precedes start_date".into());
        }
        for t in &self.templates {
            let parts = parse_template(t)?;
            if slot_count(&parts) > self.max_drugs {
                return bad(format!("template {t:?} has more slots than max_drugs"));
            }
            for p in &parts {
                if let Part::Text(text) = p {
                    self.check_literal(text, t)?;
                }
            }
        }
        for c in &self.clauses {
            self.check_literal(c, c)?;
        }
        Ok(())
    }

    fn check_literal(&self, text: &str, context: &str) -> Result<()> {
        if let Some(m) = find_matches(&tokenize(text), &self.table).first() {
            return Err(Error::Synth(format!(
                "{context:?} contains the table term {:?}",
                m.span.surface
            )));
        }
        Ok(())
    }
}

/// Serializable part of [`SynthConfig`]; the vocabulary table is
/// supplied separately. Missing JSON fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub seed: u64,
    pub n_records: usize,
    pub misspell_rate: f64,
    pub holdout_terms: f64,
    pub test_fraction: f64,
    pub templates: Vec<String>,
    pub clauses: Vec<String>,
    pub clause_rate: f64,
    pub max_clauses: usize,
    pub max_drugs: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings {
            seed: 0,
            n_records: 1000,
            misspell_rate: 0.1,
            holdout_terms: 0.1,
            test_fraction: 0.15,
            templates: DEFAULT_TEMPLATES.iter().map(|s| s.to_string()).collect(),
            clauses: DEFAULT_CLAUSES.iter().map(|s| s.to_string()).collect(),
            clause_rate: 0.6,
            max_clauses: 3,
            max_drugs: 5,
            start_date: NaiveDate::from_ymd_opt(2014, 1, 1).expect("valid date"),
            end_date: NaiveDate::from_ymd_opt(2019, 12, 31).expect("valid date"),
        }
    }
}

impl SynthSettings {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Synth(format!("config: {e}")))
    }

    pub fn into_config(self, table: LookupTable) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            n_records: self.n_records,
            table,
            misspell_rate: self.misspell_rate,
            holdout_terms: self.holdout_terms,
            test_fraction: self.test_fraction,
            templates: self.templates,
            clauses: self.clauses,
            clause_rate: self.clause_rate,
            max_clauses: self.max_clauses,
            max_drugs: self.max_drugs,
            start_date: self.start_date,
            end_date: self.end_date,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Part {
    Text(String),
    Drug,
    List,
}

fn parse_template(t: &str) -> Result<Vec<Part>> {
    let mut parts = Vec::new();
    let mut rest = t;
    while !rest.is_empty() {
        let next = [(DRUG_SLOT, Part::Drug), (LIST_SLOT, Part::List)]
            .into_iter()
            .filter_map(|(pat, part)| rest.find(pat).map(|i| (i, pat.len(), part)))
            .min_by_key(|(i, _, _)| *i);
        match next {
            Some((i, len, part)) => {
                if i > 0 {
                    parts.push(Part::Text(rest[..i].to_string()));
                }
                parts.push(part);
                rest = &rest[i + len..];
            }
            None => {
                parts.push(Part::Text(rest.to_string()));
                rest = "";
            }
        }
    }
    if slot_count(&parts) == 0 {
        return Err(Error::Synth(format!("template {t:?} has no drug slot")));
    }
    Ok(parts)
}

fn slot_count(parts: &[Part]) -> usize {
    parts.iter().filter(|p| !matches!(p, Part::Text(_))).count()
}

/// Metadata for one generated drug mention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub record_id: String,
    pub span: Span,
    /// Vocabulary term the mention was drawn from.
    pub term: String,
    /// Text as written in the record.
    pub surface: String,
    pub misspelled: bool,
    pub holdout: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthCorpus {
    pub records: Vec<Record>,
    pub gold: Vec<TaggedSequence>,
    pub mentions: Vec<Mention>,
    pub holdout_vocabulary: Vec<String>,
}

impl SynthCorpus {
    /// Index of the first record in which held-out terms may appear.
    pub fn holdout_start(n_records: usize, test_fraction: f64) -> usize {
        n_records - ((n_records as f64 * test_fraction) + 1e-9).floor() as usize
    }
}

/// Misspell `term` with one or two character edits (substitution,
/// deletion, insertion, or a single adjacent transposition). Edits touch
/// only alphanumeric characters and insert only letters, so the token
/// boundaries of the term are preserved. The result is never a table key.
pub fn inject_misspelling<R: Rng + ?Sized>(term: &str, table: &LookupTable, rng: &mut R) -> Result<String> {
    let term = term.to_uppercase();
    let chars: Vec<char> = term.chars().collect();
    if chars.len() < 3 {
        return Err(Error::Synth(format!("term {term:?} is shorter than 3 characters")));
    }
    let shape = token_shape(&term);
    for _ in 0..200 {
        let mut cur = chars.clone();
        let n_edits = if rng.gen_bool(0.5) { 1 } else { 2 };
        let mut done = 0;
        for _ in 0..10 {
            if done == n_edits {
                break;
            }
            match rng.gen_range(0..4) {
                // Transposition counts as two plain edits; only allow it alone.
                0 if done == 0 => {
                    let idx: Vec<usize> = (0..cur.len().saturating_sub(1))
                        .filter(|&i| cur[i].is_alphanumeric() && cur[i + 1].is_alphanumeric() && cur[i] != cur[i + 1])
                        .collect();
                    if let Some(&i) = idx.choose(rng) {
                        cur.swap(i, i + 1);
                        done = n_edits;
                    }
                }
                1 => {
                    let idx: Vec<usize> = (0..cur.len()).filter(|&i| cur[i].is_alphanumeric()).collect();
                    if let Some(&i) = idx.choose(rng) {
                        let c = random_letter(rng);
                        if c != cur[i] {
                            cur[i] = c;
                            done += 1;
                        }
                    }
                }
                2 => {
                    let idx: Vec<usize> = (0..cur.len())
                        .filter(|&i| {
                            cur[i].is_alphanumeric()
                                && (i > 0 && cur[i - 1].is_alphanumeric()
                                    || i + 1 < cur.len() && cur[i + 1].is_alphanumeric())
                        })
                        .collect();
                    if let Some(&i) = idx.choose(rng) {
                        cur.remove(i);
                        done += 1;
                    }
                }
                3 => {
                    let idx: Vec<usize> = (0..=cur.len())
                        .filter(|&i| {
                            i > 0 && cur[i - 1].is_alphanumeric() || i < cur.len() && cur[i].is_alphanumeric()
                        })
                        .collect();
                    if let Some(&i) = idx.choose(rng) {
                        cur.insert(i, random_letter(rng));
                        done += 1;
                    }
                }
                _ => {}
            }
        }
        let out: String = cur.into_iter().collect();
        if out != term && token_shape(&out) == shape && !table.contains_surface(&out) {
            return Ok(out);
        }
    }
    Err(Error::Synth(format!("could not misspell {term:?}")))
}

fn random_letter<R: Rng + ?Sized>(rng: &mut R) -> char {
    (b'A' + rng.gen_range(0..26u8)) as char
}

/// Token count and punctuation pattern; misspelling must not change it.
fn token_shape(text: &str) -> Vec<Option<String>> {
    let tk = crate::tokenizer::Tokenizer::default();
    tokenize(text)
        .into_iter()
        .map(|t| tk.is_punctuation_token(&t.text).then_some(t.text))
        .collect()
}

fn render_list<R: Rng + ?Sized>(items: &[String], rng: &mut R) -> String {
    match items {
        [] => String::new(),
        [a] => a.clone(),
        [a, b] => {
            let joiner = [" AND ", ", ", ", AND "].choose(rng).copied().unwrap_or(" AND ");
            format!("{a}{joiner}{b}")
        }
        _ => {
            let (last, head) = items.split_last().expect("non-empty");
            let joiner = [", AND ", ", ", ", & ", " AND "].choose(rng).copied().unwrap_or(", AND ");
            format!("{}{joiner}{last}", head.join(", "))
        }
    }
}

struct Vocabulary {
    open: Vec<String>,
    all: Vec<String>,
    holdout: Vec<String>,
}

fn vocabulary(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vocabulary {
    let mut all: Vec<String> = config.table.keys().map(detokenize).collect();
    all.sort();
    let mut shuffled = all.clone();
    shuffled.shuffle(rng);
    let n_hold = ((all.len() as f64 * config.holdout_terms) + 1e-9).floor() as usize;
    let n_hold = n_hold.min(all.len().saturating_sub(1));
    let mut holdout: Vec<String> = shuffled[..n_hold].to_vec();
    holdout.sort();
    let mut open: Vec<String> = shuffled[n_hold..].to_vec();
    open.sort();
    Vocabulary { open, all, holdout }
}

/// Generate the corpus. Output depends only on `config`.
pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let templates: Vec<Vec<Part>> = config
        .templates
        .iter()
        .map(|t| parse_template(t))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vocab = vocabulary(config, &mut rng);
    let holdout_start = SynthCorpus::holdout_start(config.n_records, config.test_fraction);
    let width = config.n_records.to_string().len().max(4);
    let span_days = (config.end_date - config.start_date).num_days().max(0) as u64;

    let mut records = Vec::with_capacity(config.n_records);
    let mut gold = Vec::with_capacity(config.n_records);
    let mut mentions = Vec::new();
    for i in 0..config.n_records {
        let id = format!("SYN{:0width$}", i + 1);
        let offset = (i as u64 * (span_days + 1)) / config.n_records as u64;
        let date = config.start_date + chrono::Duration::days(offset as i64);
        let pool = if i >= holdout_start { &vocab.all } else { &vocab.open };

        let parts = templates.choose(&mut rng).expect("templates validated non-empty");
        let slots = slot_count(parts);
        let lists = parts.iter().filter(|p| matches!(p, Part::List)).count();
        let budget = config.max_drugs - (slots - lists);
        // Split the remaining mention budget over the list slots.
        let mut list_sizes = Vec::with_capacity(lists);
        let mut left = budget;
        for k in 0..lists {
            let reserve = lists - k - 1;
            let hi = left - reserve;
            let size = if hi <= 1 { 1 } else { 1 + sample_list_extra(&mut rng, hi - 1) };
            list_sizes.push(size);
            left -= size;
        }

        let mut text = String::new();
        let mut drug_surfaces: Vec<(String, String, bool)> = Vec::new();
        let mut list_iter = list_sizes.into_iter();
        for p in parts {
            match p {
                Part::Text(t) => text.push_str(t),
                Part::Drug => {
                    let d = draw_mention(config, pool, &mut rng)?;
                    text.push_str(&d.1);
                    drug_surfaces.push(d);
                }
                Part::List => {
                    let n = list_iter.next().unwrap_or(1);
                    let mut items = Vec::with_capacity(n);
                    for _ in 0..n {
                        let d = draw_mention(config, pool, &mut rng)?;
                        items.push(d.1.clone());
                        drug_surfaces.push(d);
                    }
                    text.push_str(&render_list(&items, &mut rng));
                }
            }
        }
        let mut n_clauses = 0;
        while n_clauses < config.max_clauses.min(config.clauses.len()) && rng.gen_bool(config.clause_rate) {
            n_clauses += 1;
        }
        for c in config.clauses.choose_multiple(&mut rng, n_clauses) {
            text.push_str("; ");
            text.push_str(c);
        }

        let tokens = tokenize(&text);
        let spans = locate_mentions(&tokens, &drug_surfaces).ok_or_else(|| {
            Error::Synth(format!("record {id}: drug mentions not recoverable from {text:?}"))
        })?;
        let tags = encode(tokens.len(), &spans)?;
        for (span, (term, surface, misspelled)) in spans.iter().zip(&drug_surfaces) {
            mentions.push(Mention {
                record_id: id.clone(),
                span: *span,
                holdout: vocab.holdout.binary_search(term).is_ok(),
                term: term.clone(),
                surface: surface.clone(),
                misspelled: *misspelled,
            });
        }
        records.push(Record::new(id.clone(), date, text));
        gold.push(TaggedSequence::new(id, tokens, tags)?);
    }
    Ok(SynthCorpus {
        records,
        gold,
        mentions,
        holdout_vocabulary: vocab.holdout,
    })
}

/// Extra list items beyond the first, skewed towards short lists.
fn sample_list_extra(rng: &mut ChaCha8Rng, max_extra: usize) -> usize {
    let mut n = 0;
    while n < max_extra && rng.gen_bool(0.45) {
        n += 1;
    }
    n
}

/// Returns (term, surface, misspelled).
fn draw_mention(config: &SynthConfig, pool: &[String], rng: &mut ChaCha8Rng) -> Result<(String, String, bool)> {
    let misspell = rng.gen_bool(config.misspell_rate);
    for _ in 0..100 {
        let term = pool.choose(rng).expect("vocabulary validated non-empty").clone();
        if !misspell {
            return Ok((term.clone(), term, false));
        }
        if term.chars().count() < 3 {
            continue;
        }
        let Ok(surface) = inject_misspelling(&term, &config.table, rng) else {
            continue;
        };
        // The lookup baseline must find nothing inside a misspelled mention.
        if find_matches(&tokenize(&surface), &config.table).is_empty() {
            return Ok((term, surface, true));
        }
    }
    Err(Error::Synth("could not draw a misspelled mention".into()))
}

/// Find each mention's token span, scanning left to right.
fn locate_mentions(tokens: &[Token], mentions: &[(String, String, bool)]) -> Option<Vec<Span>> {
    let mut spans = Vec::with_capacity(mentions.len());
    let mut from = 0;
    for (_, surface, _) in mentions {
        let want: Vec<String> = tokenize(surface).into_iter().map(|t| t.text).collect();
        let start = (from..=tokens.len().checked_sub(want.len())?)
            .find(|&s| tokens[s..s + want.len()].iter().zip(&want).all(|(t, w)| &t.text == w))?;
        spans.push(Span::new(start, start + want.len() - 1));
        from = start + want.len();
    }
    Some(spans)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_table() -> LookupTable {
        let mut t = LookupTable::new("t");
        for term in ["HEROIN", "FENTANYL", "ALPRAZOLAM", "VALERYL FENTANYL", "U-47700", "7-AMINOCLONAZEPAM"] {
            t.insert(term, "").unwrap();
        }
        t
    }

    #[test]
    fn template_parsing() {
        assert_eq!(
            parse_template("A {DRUG} B {DRUGS}").unwrap(),
            [
                Part::Text("A ".into()),
                Part::Drug,
                Part::Text(" B ".into()),
                Part::List
            ]
        );
        assert!(parse_template("NO SLOTS HERE").is_err());
    }

    #[test]
    fn template_without_slot_is_rejected() {
        let mut c = SynthConfig::new(1, 5, small_table());
        c.templates = vec!["HEART DISEASE".into()];
        assert!(generate(&c).is_err());
    }

    #[test]
    fn literal_table_terms_rejected() {
        let mut c = SynthConfig::new(1, 5, small_table());
        c.templates = vec!["{DRUG} AND HEROIN".into()];
        assert!(matches!(c.validate(), Err(Error::Synth(_))));
    }

    #[test]
    fn misspelling_basics() {
        let t = small_table();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let m = inject_misspelling("ALPRAZOLAM", &t, &mut rng).unwrap();
            assert_ne!(m, "ALPRAZOLAM");
            assert!(!t.contains_surface(&m));
            let len = m.chars().count() as i64;
            assert!((len - 10).abs() <= 2);
        }
        assert!(inject_misspelling("AB", &t, &mut rng).is_err());
        let m = inject_misspelling("u-47700", &t, &mut rng).unwrap();
        assert_eq!(tokenize(&m).len(), 3);
    }

    #[test]
    fn settings_json() {
        let s = SynthSettings::from_json(r#"{"seed": 9, "n_records": 12, "misspell_rate": 0.5}"#).unwrap();
        assert_eq!((s.seed, s.n_records, s.misspell_rate), (9, 12, 0.5));
        assert_eq!(s.templates.len(), DEFAULT_TEMPLATES.len());
        assert!(SynthSettings::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn deterministic() {
        let c = SynthConfig::new(42, 50, small_table());
        assert_eq!(generate(&c).unwrap(), generate(&c).unwrap());
        let other = SynthConfig::new(43, 50, small_table());
        assert_ne!(generate(&c).unwrap().records, generate(&other).unwrap().records);
    }

    #[test]
    fn gold_matches_text() {
        let mut c = SynthConfig::new(7, 200, small_table());
        c.misspell_rate = 0.3;
        let s = generate(&c).unwrap();
        for (r, g) in s.records.iter().zip(&s.gold) {
            assert_eq!(tokenize(&r.cause_text), g.tokens);
            assert!(crate::bilou::validate(&g.tags).is_empty());
            let n = crate::bilou::decode(&g.tags).len();
            assert!((1..=5).contains(&n), "{n} mentions in {}", r.cause_text);
        }
        assert!(s.records.windows(2).all(|w| w[0].date_of_death <= w[1].date_of_death && w[0].id < w[1].id));
    }
}

//! Gazetteer baseline: whole-token longest-match lookup of drug search
//! terms, each crosswalked to a referent drug.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bilou::{self, EntitySpan, Span, Tag, TaggedSequence};
use crate::error::{Error, Result};
use crate::tokenizer::{detokenize, tokenize, Token};

/// Format version written to table files and reported by `--version`.
pub const TABLE_FORMAT_VERSION: &str = "1";

const HEADER: &str = "SEARCH_TERM\tREFERENT";
const VERSION_PREFIX: &str = "# version=";

/// The surveillance-system table shipped with the crate.
pub const DEFAULT_TABLE_TSV: &str = include_str!("../data/drug_table.tsv");

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct TrieNode {
    referent: Option<String>,
    children: BTreeMap<String, TrieNode>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LookupTable {
    entries: BTreeMap<Vec<String>, String>,
    trie: TrieNode,
    version: String,
}

impl LookupTable {
    pub fn new(version: impl Into<String>) -> Self {
        LookupTable {
            version: version.into(),
            ..Default::default()
        }
    }

    /// The table in [`DEFAULT_TABLE_TSV`].
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_TABLE_TSV).expect("bundled table is well formed")
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Add a search term. An empty referent crosswalks the term to itself.
    pub fn insert(&mut self, term: &str, referent: &str) -> Result<()> {
        let key: Vec<String> = tokenize(term).into_iter().map(|t| t.text).collect();
        if key.is_empty() {
            return Err(Error::Table("empty search term".into()));
        }
        let referent = match referent.trim() {
            "" => detokenize(&key),
            r => r.to_uppercase(),
        };
        if self.entries.contains_key(&key) {
            return Err(Error::Table(format!("duplicate search term {:?}", detokenize(&key))));
        }
        let mut node = &mut self.trie;
        for tok in &key {
            node = node.children.entry(tok.clone()).or_default();
        }
        node.referent = Some(referent.clone());
        self.entries.insert(key, referent);
        Ok(())
    }

    pub fn referent(&self, key: &[&str]) -> Option<&str> {
        let mut node = &self.trie;
        for tok in key {
            node = node.children.get(*tok)?;
        }
        node.referent.as_deref()
    }

    pub fn contains_key(&self, key: &[&str]) -> bool {
        self.referent(key).is_some()
    }

    /// True if `surface`, once tokenized, is a search term.
    pub fn contains_surface(&self, surface: &str) -> bool {
        let toks = tokenize(surface);
        let key: Vec<&str> = toks.iter().map(Token::as_str).collect();
        !key.is_empty() && self.contains_key(&key)
    }

    /// Search terms as token sequences, in sorted order.
    pub fn keys(&self) -> impl Iterator<Item = &[String]> {
        self.entries.keys().map(Vec::as_slice)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[String], &str)> {
        self.entries.iter().map(|(k, v)| (k.as_slice(), v.as_str()))
    }

    pub fn referent_count(&self) -> usize {
        self.entries.values().collect::<BTreeSet<_>>().len()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = LookupTable::new("");
        let mut header_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if lineno == 1 {
                if let Some(v) = line.strip_prefix(VERSION_PREFIX) {
                    table.version = v.trim().to_string();
                    continue;
                }
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                if line.trim_end() != HEADER {
                    return Err(Error::Parse {
                        context: "lookup table".into(),
                        line: lineno,
                        message: format!("expected header {HEADER:?}"),
                    });
                }
                header_seen = true;
                continue;
            }
            let (term, referent) = line.split_once('\t').unwrap_or((line, ""));
            if referent.contains('\t') {
                return Err(Error::Parse {
                    context: "lookup table".into(),
                    line: lineno,
                    message: "expected two columns".into(),
                });
            }
            table.insert(term, referent).map_err(|e| match e {
                Error::Table(m) => Error::Table(format!("line {lineno}: {m}")),
                other => other,
            })?;
        }
        Ok(table)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        if !self.version.is_empty() {
            out.push_str(&format!("{VERSION_PREFIX}{}\n", self.version));
        }
        out.push_str(HEADER);
        out.push('\n');
        for (k, v) in &self.entries {
            let term = detokenize(k);
            let referent = if *v == term { "" } else { v.as_str() };
            out.push_str(&format!("{term}\t{referent}\n"));
        }
        out
    }
}

pub fn load_table(path: impl AsRef<Path>) -> Result<LookupTable> {
    let path = path.as_ref();
    let text = crate::io::read_to_string(path)?;
    LookupTable::parse(&text).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            context: path.display().to_string(),
            line,
            message,
        },
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Match {
    pub span: EntitySpan,
    pub referent: String,
}

/// Greedy left-to-right longest match over whole tokens.
pub fn find_matches(tokens: &[Token], table: &LookupTable) -> Vec<Match> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let mut node = &table.trie;
        let mut best: Option<(usize, &str)> = None;
        for (j, tok) in tokens[i..].iter().enumerate() {
            match node.children.get(&tok.text) {
                Some(next) => {
                    node = next;
                    if let Some(r) = &node.referent {
                        best = Some((i + j, r));
                    }
                }
                None => break,
            }
        }
        match best {
            Some((end, referent)) => {
                out.push(Match {
                    span: EntitySpan::from_span(Span::new(i, end), tokens),
                    referent: referent.to_string(),
                });
                i = end + 1;
            }
            None => i += 1,
        }
    }
    out
}

pub fn to_tagged(matches: &[Match], length: usize) -> Result<Vec<Tag>> {
    let spans: Vec<Span> = matches.iter().map(|m| m.span.span()).collect();
    bilou::encode(length, &spans)
}

/// Tag a whole corpus with the lookup baseline.
pub fn tag_corpus(corpus: &[TaggedSequence], table: &LookupTable) -> Result<Vec<TaggedSequence>> {
    corpus
        .iter()
        .map(|s| {
            let tags = to_tagged(&find_matches(&s.tokens, table), s.len())?;
            TaggedSequence::new(s.record_id.clone(), s.tokens.clone(), tags)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(&str, &str)]) -> LookupTable {
        let mut t = LookupTable::new("test");
        for (k, v) in rows {
            t.insert(k, v).unwrap();
        }
        t
    }

    #[test]
    fn crosswalk_and_self_referent() {
        let t = LookupTable::parse("SEARCH_TERM\tREFERENT\nCLONAZPAM\tCLONAZEPAM\nFENTANYL\t\nheroin\n").unwrap();
        assert_eq!(t.referent(&["CLONAZPAM"]), Some("CLONAZEPAM"));
        assert_eq!(t.referent(&["FENTANYL"]), Some("FENTANYL"));
        assert_eq!(t.referent(&["HEROIN"]), Some("HEROIN"));
        assert_eq!(t.version(), "");
    }

    #[test]
    fn version_and_errors() {
        let t = LookupTable::parse("# version=2020-03\nSEARCH_TERM\tREFERENT\nX\t\n").unwrap();
        assert_eq!(t.version(), "2020-03");
        let err = LookupTable::parse("SEARCH_TERM\tREFERENT\nFENTANYL\t\nfentanyl\t\n").unwrap_err();
        assert!(err.to_string().contains("FENTANYL"), "{err}");
        assert!(LookupTable::parse("SEARCH_TERM\tREFERENT\n\tX\n").is_err());
        assert!(LookupTable::parse("TERM\tREF\nX\t\n").is_err());
    }

    #[test]
    fn multi_token_keys_are_pre_tokenized() {
        let t = table(&[("U-47700", ""), ("VALERYL FENTANYL", "")]);
        assert!(t.contains_key(&["U", "-", "47700"]));
        assert!(t.contains_key(&["VALERYL", "FENTANYL"]));
        assert!(t.contains_surface("valeryl  fentanyl"));
    }

    #[test]
    fn longest_match_wins() {
        let t = table(&[("FENTANYL", ""), ("VALERYL FENTANYL", "")]);
        let m = find_matches(&tokenize("VALERYL FENTANYL PRESENT"), &t);
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].span.start, m[0].span.end), (0, 1));
        assert_eq!(m[0].span.surface, "VALERYL FENTANYL");
        let m = find_matches(&tokenize("VALERYL AND FENTANYL"), &t);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].span.start, 2);
    }

    #[test]
    fn whole_token_semantics() {
        let t = table(&[("FENTANYL", "")]);
        assert!(find_matches(&tokenize("FENTANYLS"), &t).is_empty());
        assert_eq!(find_matches(&tokenize("(FENTANYL)"), &t).len(), 1);
    }

    #[test]
    fn prefix_of_longer_key_without_match_falls_back() {
        let t = table(&[("A B C", ""), ("B", "")]);
        let m = find_matches(&tokenize("A B D"), &t);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].span.start, 1);
    }

    #[test]
    fn tagging() {
        let t = table(&[("HEROIN", ""), ("VALERYL FENTANYL", "")]);
        let m = find_matches(&tokenize("AND HEROIN X"), &t);
        assert_eq!(to_tagged(&m, 3).unwrap(), [Tag::O, Tag::U_DRUG, Tag::O]);
        let m = find_matches(&tokenize("VALERYL FENTANYL"), &t);
        assert_eq!(to_tagged(&m, 2).unwrap(), [Tag::B_DRUG, Tag::L_DRUG]);
        assert_eq!(to_tagged(&[], 4).unwrap(), [Tag::O; 4]);
    }

    #[test]
    fn tsv_round_trip() {
        let t = table(&[("CLONAZPAM", "CLONAZEPAM"), ("U-47700", "")]);
        assert_eq!(LookupTable::parse(&t.to_tsv()).unwrap().entries, t.entries);
    }
}

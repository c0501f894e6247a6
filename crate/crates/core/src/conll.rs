//! Tab-separated token/tag files.
//!
//! ```text
//! # id=DC0001
//! HEROIN<TAB>U-drug
//! OVERDOSE<TAB>O
//!
//! ```
//!
//! A `# id=` comment opens each record and a blank line closes it.

use std::fmt::Write as _;
use std::path::Path;

use crate::bilou::{Tag, TaggedSequence};
use crate::error::{Error, Result};
use crate::tokenizer::Token;

const ID_PREFIX: &str = "# id=";

pub fn parse(text: &str) -> Result<Vec<TaggedSequence>> {
    let err = |line: usize, message: String| Error::Parse {
        context: "conll".into(),
        line,
        message,
    };
    let mut out = Vec::new();
    let mut current: Option<TaggedSequence> = None;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if let Some(id) = line.strip_prefix(ID_PREFIX) {
            if let Some(prev) = current.take() {
                out.push(prev);
            }
            if id.is_empty() {
                return Err(err(lineno, "empty record id".into()));
            }
            current = Some(TaggedSequence::untagged(id, Vec::new()));
        } else if line.trim().is_empty() {
            if let Some(prev) = current.take() {
                out.push(prev);
            }
        } else if line.starts_with('#') {
            continue;
        } else {
            let seq = current
                .as_mut()
                .ok_or_else(|| err(lineno, "token line outside a record (missing '# id=')".into()))?;
            let (token, tag) = line
                .split_once('\t')
                .ok_or_else(|| err(lineno, format!("expected TOKEN<TAB>TAG, got {line:?}")))?;
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(err(lineno, format!("invalid token {token:?}")));
            }
            let tag: Tag = tag
                .parse()
                .map_err(|_| err(lineno, format!("invalid tag {tag:?}")))?;
            let index = seq.tokens.len();
            seq.tokens.push(Token::new(token, index));
            seq.tags.push(tag);
        }
    }
    if let Some(prev) = current.take() {
        out.push(prev);
    }
    let mut seen = std::collections::HashSet::new();
    for s in &out {
        if !seen.insert(s.record_id.as_str()) {
            return Err(Error::DuplicateId(s.record_id.clone()));
        }
    }
    Ok(out)
}

pub fn render(sequences: &[TaggedSequence]) -> Result<String> {
    let mut out = String::new();
    for seq in sequences {
        if seq.record_id.is_empty() || seq.record_id.contains(['\n', '\r']) {
            return Err(Error::Alignment {
                record: seq.record_id.clone(),
                index: 0,
                message: "record id must be non-empty and single-line".into(),
            });
        }
        let _ = writeln!(out, "{ID_PREFIX}{}", seq.record_id);
        for (i, (tok, tag)) in seq.tokens.iter().zip(&seq.tags).enumerate() {
            if tok.text.is_empty() || tok.text.chars().any(char::is_whitespace) {
                return Err(Error::Alignment {
                    record: seq.record_id.clone(),
                    index: i,
                    message: format!("token {:?} cannot be written", tok.text),
                });
            }
            let _ = writeln!(out, "{}\t{}", tok.text, tag);
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn read(path: impl AsRef<Path>) -> Result<Vec<TaggedSequence>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            context: path.display().to_string(),
            line,
            message,
        },
        other => other,
    })
}

pub fn write(path: impl AsRef<Path>, sequences: &[TaggedSequence]) -> Result<()> {
    crate::io::write_atomic(path, render(sequences)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::tokenize;

    #[test]
    fn parse_render_round_trip() {
        let seq = TaggedSequence::new(
            "DC1",
            tokenize("7-AMINOCLONAZEPAM AND HEROIN OVERDOSE"),
            vec![Tag::B_DRUG, Tag::I_DRUG, Tag::L_DRUG, Tag::O, Tag::U_DRUG, Tag::O],
        )
        .unwrap();
        let empty = TaggedSequence::untagged("DC2", vec![]);
        let text = render(&[seq.clone(), empty.clone()]).unwrap();
        assert!(text.starts_with("# id=DC1\n7\tB-drug\n-\tI-drug\n"));
        assert_eq!(parse(&text).unwrap(), vec![seq, empty]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse("# id=A\nHEROIN U-drug\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse("# id=A\nHEROIN\tU-DRUG\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse("HEROIN\tO\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        assert!(matches!(
            parse("# id=A\nX\tO\n\n# id=A\nY\tO\n"),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn tab_in_token_is_rejected_on_write() {
        let seq = TaggedSequence::untagged("A", vec![Token::new("A\tB", 0)]);
        assert!(render(&[seq]).is_err());
    }

    #[test]
    fn empty_file() {
        assert!(parse("").unwrap().is_empty());
        assert_eq!(render(&[]).unwrap(), "");
    }
}

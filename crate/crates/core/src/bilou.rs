//! BILOU span encoding and decoding.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenizer::{detokenize, Token};

/// Entity label carried by every non-O tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityLabel {
    Drug,
}

impl EntityLabel {
    pub const ALL: [EntityLabel; 1] = [EntityLabel::Drug];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityLabel::Drug => "drug",
        }
    }
}

impl FromStr for EntityLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EntityLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Parse {
                context: "tag".into(),
                line: 0,
                message: format!("unknown entity label {s:?}"),
            })
    }
}

/// Position of a token within its entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    B,
    I,
    L,
    O,
    U,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Outside,
    Begin(EntityLabel),
    Inside(EntityLabel),
    Last(EntityLabel),
    Unit(EntityLabel),
}

impl Tag {
    pub const B_DRUG: Tag = Tag::Begin(EntityLabel::Drug);
    pub const I_DRUG: Tag = Tag::Inside(EntityLabel::Drug);
    pub const L_DRUG: Tag = Tag::Last(EntityLabel::Drug);
    pub const U_DRUG: Tag = Tag::Unit(EntityLabel::Drug);
    pub const O: Tag = Tag::Outside;

    /// The five tags, in the order used as the CRF tag set.
    pub const ALL: [Tag; 5] = [Tag::O, Tag::B_DRUG, Tag::I_DRUG, Tag::L_DRUG, Tag::U_DRUG];

    pub fn symbol(self) -> Symbol {
        match self {
            Tag::Outside => Symbol::O,
            Tag::Begin(_) => Symbol::B,
            Tag::Inside(_) => Symbol::I,
            Tag::Last(_) => Symbol::L,
            Tag::Unit(_) => Symbol::U,
        }
    }

    pub fn label(self) -> Option<EntityLabel> {
        match self {
            Tag::Outside => None,
            Tag::Begin(l) | Tag::Inside(l) | Tag::Last(l) | Tag::Unit(l) => Some(l),
        }
    }

    pub fn is_outside(self) -> bool {
        self == Tag::Outside
    }

    /// Index into [`Tag::ALL`].
    pub fn index(self) -> usize {
        Tag::ALL.iter().position(|&t| t == self).expect("tag set covers every tag")
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.symbol() {
            Symbol::B => "B",
            Symbol::I => "I",
            Symbol::L => "L",
            Symbol::U => "U",
            Symbol::O => return f.write_str("O"),
        };
        write!(f, "{prefix}-{}", self.label().map_or("", EntityLabel::as_str))
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(Tag::Outside);
        }
        let bad = || Error::Parse {
            context: "tag".into(),
            line: 0,
            message: format!("invalid tag {s:?}"),
        };
        let (prefix, label) = s.split_once('-').ok_or_else(bad)?;
        let label: EntityLabel = label.parse().map_err(|_| bad())?;
        match prefix {
            "B" => Ok(Tag::Begin(label)),
            "I" => Ok(Tag::Inside(label)),
            "L" => Ok(Tag::Last(label)),
            "U" => Ok(Tag::Unit(label)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Tag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive token range `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Surface form of the span over `tokens`, detokenized.
    pub fn surface(&self, tokens: &[Token]) -> String {
        let texts: Vec<&str> = tokens[self.start..=self.end].iter().map(Token::as_str).collect();
        detokenize(&texts)
    }
}

/// A drug mention: token range plus its surface form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl EntitySpan {
    pub fn from_span(span: Span, tokens: &[Token]) -> Self {
        EntitySpan {
            start: span.start,
            end: span.end,
            surface: span.surface(tokens),
        }
    }

    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }
}

/// Tokens of one record paired with one tag per token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSequence {
    pub record_id: String,
    pub tokens: Vec<Token>,
    pub tags: Vec<Tag>,
}

impl TaggedSequence {
    pub fn new(record_id: impl Into<String>, tokens: Vec<Token>, tags: Vec<Tag>) -> Result<Self> {
        let record_id = record_id.into();
        if tokens.len() != tags.len() {
            return Err(Error::Alignment {
                record: record_id,
                index: tokens.len().min(tags.len()),
                message: format!("{} tokens but {} tags", tokens.len(), tags.len()),
            });
        }
        Ok(TaggedSequence {
            record_id,
            tokens,
            tags,
        })
    }

    /// All-O sequence over `tokens`.
    pub fn untagged(record_id: impl Into<String>, tokens: Vec<Token>) -> Self {
        let tags = vec![Tag::O; tokens.len()];
        TaggedSequence {
            record_id: record_id.into(),
            tokens,
            tags,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token_texts(&self) -> Vec<&str> {
        self.tokens.iter().map(Token::as_str).collect()
    }

    /// Decoded entities (repair applied).
    pub fn entities(&self) -> Vec<EntitySpan> {
        decode(&self.tags)
            .into_iter()
            .map(|s| EntitySpan::from_span(s, &self.tokens))
            .collect()
    }

    /// Verify that `other` covers the same record with the same tokens.
    pub fn check_aligned(&self, other: &TaggedSequence) -> Result<()> {
        if self.record_id != other.record_id {
            return Err(Error::Alignment {
                record: self.record_id.clone(),
                index: 0,
                message: format!("paired with record {:?}", other.record_id),
            });
        }
        for (i, (a, b)) in self.tokens.iter().zip(&other.tokens).enumerate() {
            if a.text != b.text {
                return Err(Error::Alignment {
                    record: self.record_id.clone(),
                    index: i,
                    message: format!("token {:?} vs {:?}", a.text, b.text),
                });
            }
        }
        if self.tokens.len() != other.tokens.len() {
            return Err(Error::Alignment {
                record: self.record_id.clone(),
                index: self.tokens.len().min(other.tokens.len()),
                message: format!("{} vs {} tokens", self.tokens.len(), other.tokens.len()),
            });
        }
        Ok(())
    }
}

/// Pair two corpora record by record, checking token alignment.
pub(crate) fn align<'a>(
    a: &'a [TaggedSequence],
    b: &'a [TaggedSequence],
) -> Result<Vec<(&'a TaggedSequence, &'a TaggedSequence)>> {
    let by_id: std::collections::HashMap<&str, &TaggedSequence> =
        b.iter().map(|s| (s.record_id.as_str(), s)).collect();
    if by_id.len() != b.len() {
        return Err(Error::Alignment {
            record: String::new(),
            index: 0,
            message: "duplicate record ids in second corpus".into(),
        });
    }
    if a.len() != b.len() {
        let missing = a
            .iter()
            .find(|s| !by_id.contains_key(s.record_id.as_str()))
            .map(|s| s.record_id.clone())
            .unwrap_or_default();
        return Err(Error::Alignment {
            record: missing,
            index: 0,
            message: format!("corpora have {} and {} records", a.len(), b.len()),
        });
    }
    a.iter()
        .map(|x| {
            let y = by_id.get(x.record_id.as_str()).ok_or_else(|| Error::Alignment {
                record: x.record_id.clone(),
                index: 0,
                message: "record missing from second corpus".into(),
            })?;
            x.check_aligned(y)?;
            Ok((x, *y))
        })
        .collect()
}

/// Encode sorted, non-overlapping spans as drug tags.
pub fn encode(length: usize, spans: &[Span]) -> Result<Vec<Tag>> {
    encode_labeled(length, spans.iter().map(|&s| (s, EntityLabel::Drug)))
}

pub fn encode_labeled<I>(length: usize, spans: I) -> Result<Vec<Tag>>
where
    I: IntoIterator<Item = (Span, EntityLabel)>,
{
    let mut tags = vec![Tag::O; length];
    let mut next_free = 0;
    for (span, label) in spans {
        let bad = |reason: &str| Error::Span {
            start: span.start,
            end: span.end,
            reason: reason.into(),
        };
        if span.start > span.end {
            return Err(bad("start after end"));
        }
        if span.end >= length {
            return Err(bad(&format!("out of bounds for length {length}")));
        }
        if span.start < next_free {
            return Err(bad("overlaps or precedes the previous span"));
        }
        if span.start == span.end {
            tags[span.start] = Tag::Unit(label);
        } else {
            tags[span.start] = Tag::Begin(label);
            for t in &mut tags[span.start + 1..span.end] {
                *t = Tag::Inside(label);
            }
            tags[span.end] = Tag::Last(label);
        }
        next_free = span.end + 1;
    }
    Ok(tags)
}

/// Decode tags into spans. Total: invalid input is repaired.
///
/// Each maximal run of non-O tokens sharing a label is decoded by the
/// BILOU grammar if the run is itself well formed; otherwise the whole
/// run becomes a single span.
pub fn decode(tags: &[Tag]) -> Vec<Span> {
    decode_labeled(tags).into_iter().map(|(s, _)| s).collect()
}

pub fn decode_labeled(tags: &[Tag]) -> Vec<(Span, EntityLabel)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tags.len() {
        let Some(label) = tags[i].label() else {
            i += 1;
            continue;
        };
        let start = i;
        while i < tags.len() && tags[i].label() == Some(label) {
            i += 1;
        }
        let run = &tags[start..i];
        match parse_run(run) {
            Some(spans) => out.extend(
                spans
                    .into_iter()
                    .map(|s| (Span::new(s.start + start, s.end + start), label)),
            ),
            None => out.push((Span::new(start, i - 1), label)),
        }
    }
    out
}

/// Strict grammar parse of a run of same-label non-O tags.
fn parse_run(run: &[Tag]) -> Option<Vec<Span>> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    for (i, tag) in run.iter().enumerate() {
        match (tag.symbol(), open) {
            (Symbol::U, None) => spans.push(Span::new(i, i)),
            (Symbol::B, None) => open = Some(i),
            (Symbol::I, Some(_)) => {}
            (Symbol::L, Some(s)) => {
                spans.push(Span::new(s, i));
                open = None;
            }
            _ => return None,
        }
    }
    open.is_none().then_some(spans)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// B not eventually closed by L.
    UnclosedBegin,
    /// I without a preceding B or I.
    InsideWithoutBegin,
    /// L without a preceding B or I.
    LastWithoutBegin,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::UnclosedBegin => "unclosed B",
            ViolationKind::InsideWithoutBegin => "I without B",
            ViolationKind::LastWithoutBegin => "L without B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

/// Every grammar violation, in position order. Empty iff `tags` is valid.
pub fn validate(tags: &[Tag]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut open: Option<(usize, EntityLabel)> = None;
    for (i, &tag) in tags.iter().enumerate() {
        let continues = |l: EntityLabel| matches!(open, Some((_, ol)) if ol == l);
        match tag {
            Tag::Inside(l) if continues(l) => {}
            Tag::Last(l) if continues(l) => open = None,
            _ => {
                if let Some((p, _)) = open.take() {
                    out.push(Violation {
                        index: p,
                        kind: ViolationKind::UnclosedBegin,
                    });
                }
                match tag {
                    Tag::Begin(l) => open = Some((i, l)),
                    Tag::Inside(_) => out.push(Violation {
                        index: i,
                        kind: ViolationKind::InsideWithoutBegin,
                    }),
                    Tag::Last(_) => out.push(Violation {
                        index: i,
                        kind: ViolationKind::LastWithoutBegin,
                    }),
                    Tag::Unit(_) | Tag::Outside => {}
                }
            }
        }
    }
    if let Some((p, _)) = open {
        out.push(Violation {
            index: p,
            kind: ViolationKind::UnclosedBegin,
        });
    }
    out.sort_by_key(|v| v.index);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const B: Tag = Tag::B_DRUG;
    const I: Tag = Tag::I_DRUG;
    const L: Tag = Tag::L_DRUG;
    const U: Tag = Tag::U_DRUG;
    const O: Tag = Tag::O;

    #[test]
    fn encode_table_example() {
        let tags = encode(6, &[Span::new(0, 2), Span::new(4, 4)]).unwrap();
        assert_eq!(tags, [B, I, L, O, U, O]);
        assert_eq!(encode(3, &[]).unwrap(), [O, O, O]);
        assert_eq!(encode(2, &[Span::new(0, 1)]).unwrap(), [B, L]);
    }

    #[test]
    fn encode_rejects_bad_spans() {
        let err = encode(3, &[Span::new(1, 3)]).unwrap_err();
        assert!(err.to_string().contains("1..=3"), "{err}");
        assert!(encode(5, &[Span::new(0, 2), Span::new(2, 3)]).is_err());
        assert!(encode(5, &[Span::new(3, 3), Span::new(0, 0)]).is_err());
        assert!(encode(5, &[Span::new(3, 2)]).is_err());
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode(&[B, I, L, O, U, O]), [Span::new(0, 2), Span::new(4, 4)]);
        assert!(decode(&[O, O, O]).is_empty());
        assert_eq!(decode(&[I, L, O]), [Span::new(0, 1)]);
    }

    #[test]
    fn decode_keeps_adjacent_valid_entities_apart() {
        assert_eq!(decode(&[U, U]), [Span::new(0, 0), Span::new(1, 1)]);
        assert_eq!(decode(&[B, L, U]), [Span::new(0, 1), Span::new(2, 2)]);
    }

    #[test]
    fn decode_repairs_partial_spans() {
        // "CRACK" tagged O, "COCAINE" tagged U.
        assert_eq!(decode(&[O, U]), [Span::new(1, 1)]);
        assert_eq!(decode(&[B, O, L]), [Span::new(0, 0), Span::new(2, 2)]);
        assert_eq!(decode(&[U, B, I]), [Span::new(0, 2)]);
    }

    #[test]
    fn validate_examples() {
        assert!(validate(&[B, L]).is_empty());
        assert!(validate(&[U]).is_empty());
        assert_eq!(
            validate(&[B, O]),
            [Violation {
                index: 0,
                kind: ViolationKind::UnclosedBegin
            }]
        );
        let v = validate(&[I, L, B]);
        let kinds: Vec<_> = v.iter().map(|v| (v.index, v.kind)).collect();
        assert_eq!(
            kinds,
            [
                (0, ViolationKind::InsideWithoutBegin),
                (1, ViolationKind::LastWithoutBegin),
                (2, ViolationKind::UnclosedBegin)
            ]
        );
    }

    #[test]
    fn tag_strings() {
        for t in Tag::ALL {
            assert_eq!(t.to_string().parse::<Tag>().unwrap(), t);
        }
        assert_eq!(Tag::B_DRUG.to_string(), "B-drug");
        assert!("B-DRUG".parse::<Tag>().is_err());
        assert!("X".parse::<Tag>().is_err());
    }

    fn arb_spans() -> impl Strategy<Value = (usize, Vec<Span>)> {
        (0usize..=50).prop_flat_map(|n| {
            (Just(n), proptest::collection::vec(0usize..4, n)).prop_map(|(n, cuts)| {
                // cut codes: 0 = outside, 1 = start unit, 2 = start multi, 3 = continue
                let mut spans: Vec<Span> = Vec::new();
                let mut i = 0;
                while i < n {
                    match cuts[i] {
                        1 => spans.push(Span::new(i, i)),
                        2 | 3 => {
                            let mut end = i;
                            while end + 1 < n && cuts[end + 1] == 3 {
                                end += 1;
                            }
                            spans.push(Span::new(i, end));
                            i = end;
                        }
                        _ => {}
                    }
                    i += 1;
                }
                (n, spans)
            })
        })
    }

    proptest! {
        #[test]
        fn round_trip((n, spans) in arb_spans()) {
            let tags = encode(n, &spans).unwrap();
            prop_assert!(validate(&tags).is_empty());
            prop_assert_eq!(decode(&tags), spans);
        }

        #[test]
        fn decode_is_total(tags in proptest::collection::vec(proptest::sample::select(Tag::ALL.to_vec()), 0..40)) {
            let spans = decode(&tags);
            let mut next = 0;
            for s in &spans {
                prop_assert!(s.start >= next && s.start <= s.end && s.end < tags.len());
                next = s.end + 1;
            }
            prop_assert!(validate(&encode(tags.len(), &spans).unwrap()).is_empty());
        }
    }
}

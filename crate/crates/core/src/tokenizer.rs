//! Uppercasing tokenizer for cause-of-death text.
//!
//! Text is split on whitespace, and every character from the punctuation
//! set becomes a token of its own. Everything else (letters, digits,
//! underscores, stray symbols) stays glued into word tokens.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default punctuation set. Each of these is always emitted as a
/// one-character token.
pub const DEFAULT_PUNCTUATION: &[char] = &[
    ',', ';', '.', ':', '(', ')', '[', ']', '&', '-', '/', '\'', '"',
];

const OPENING: &[char] = &['(', '['];
const CLOSING: &[char] = &[',', ';', '.', ':', ')', ']'];
const JOINING: &[char] = &['-', '/', '\'', '"'];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub index: usize,
}

impl Token {
    pub fn new(text: impl Into<String>, index: usize) -> Self {
        Token {
            text: text.into(),
            index,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenizer {
    punctuation: Vec<char>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer {
            punctuation: DEFAULT_PUNCTUATION.to_vec(),
        }
    }
}

impl Tokenizer {
    /// A tokenizer with a custom punctuation set. Whitespace characters in
    /// `punctuation` are ignored.
    pub fn with_punctuation(punctuation: impl IntoIterator<Item = char>) -> Self {
        let mut punctuation: Vec<char> = punctuation
            .into_iter()
            .filter(|c| !c.is_whitespace())
            .collect();
        punctuation.sort_unstable();
        punctuation.dedup();
        Tokenizer { punctuation }
    }

    pub fn punctuation(&self) -> &[char] {
        &self.punctuation
    }

    pub fn is_punctuation(&self, c: char) -> bool {
        self.punctuation.contains(&c)
    }

    /// True if `token` is a single punctuation character.
    pub fn is_punctuation_token(&self, token: &str) -> bool {
        let mut chars = token.chars();
        matches!((chars.next(), chars.next()), (Some(c), None) if self.is_punctuation(c))
    }

    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        let upper = text.to_uppercase();
        let mut out: Vec<Token> = Vec::new();
        let mut word = String::new();
        let flush = |word: &mut String, out: &mut Vec<Token>| {
            if !word.is_empty() {
                let index = out.len();
                out.push(Token::new(std::mem::take(word), index));
            }
        };
        for c in upper.chars() {
            if c.is_whitespace() {
                flush(&mut word, &mut out);
            } else if self.is_punctuation(c) {
                flush(&mut word, &mut out);
                let index = out.len();
                out.push(Token::new(c.to_string(), index));
            } else {
                word.push(c);
            }
        }
        flush(&mut word, &mut out);
        out
    }

    /// Inverse of [`Tokenizer::tokenize`] on canonically spaced text.
    ///
    /// Tokens are joined with single spaces, except that no space goes
    /// before `, ; . : ) ]`, after `( [`, on either side of `- / ' "`, or
    /// after a comma between two numbers (`1,1-DIFLUOROETHANE`).
    pub fn detokenize<S: AsRef<str>>(&self, tokens: &[S]) -> String {
        let mut out = String::new();
        let is_number = |t: &str| !t.is_empty() && t.chars().all(|c| c.is_ascii_digit());
        for (i, tok) in tokens.iter().enumerate() {
            let tok = tok.as_ref();
            if i > 0 {
                let prev = tokens[i - 1].as_ref();
                let locant = prev == ","
                    && self.is_punctuation(',')
                    && i >= 2
                    && is_number(tokens[i - 2].as_ref())
                    && is_number(tok);
                if !locant && self.needs_space(prev, tok) {
                    out.push(' ');
                }
            }
            out.push_str(tok);
        }
        out
    }

    fn needs_space(&self, prev: &str, next: &str) -> bool {
        let class = |tok: &str, set: &[char]| {
            self.is_punctuation_token(tok) && tok.chars().next().is_some_and(|c| set.contains(&c))
        };
        !(class(next, CLOSING)
            || class(next, JOINING)
            || class(prev, OPENING)
            || class(prev, JOINING))
    }
}

/// Tokenize with the default punctuation set.
pub fn tokenize(text: &str) -> Vec<Token> {
    Tokenizer::default().tokenize(text)
}

/// Detokenize with the default punctuation set.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    Tokenizer::default().detokenize(tokens)
}

/// Token-count summary over a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenStats {
    pub median: f64,
    pub min: usize,
    pub max: usize,
    pub total: usize,
}

/// Median/min/max/total of per-record token counts. The median of an
/// even-length list is the mean of the middle two.
pub fn token_stats<I>(counts: I) -> Result<TokenStats>
where
    I: IntoIterator<Item = usize>,
{
    let mut counts: Vec<usize> = counts.into_iter().collect();
    if counts.is_empty() {
        return Err(Error::Empty("token statistics need at least one record".into()));
    }
    counts.sort_unstable();
    let n = counts.len();
    let median = if n % 2 == 1 {
        counts[n / 2] as f64
    } else {
        (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0
    };
    Ok(TokenStats {
        median,
        min: counts[0],
        max: counts[n - 1],
        total: counts.iter().sum(),
    })
}

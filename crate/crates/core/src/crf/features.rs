use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::tokenizer::{Token, Tokenizer};

pub const BOS: &str = "<BOS>";
pub const EOS: &str = "<EOS>";

/// Which indicator features are extracted per token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureTemplateConfig {
    pub use_current_token: bool,
    /// Offsets of token-identity features relative to the current token.
    pub context_window: BTreeSet<i32>,
    /// Prefix and suffix lengths of the current token.
    pub affix_lengths: BTreeSet<usize>,
    pub shape_has_digit: bool,
    pub shape_hyphen_adjacent: bool,
    pub shape_is_punct: bool,
    pub bias: bool,
}

impl Default for FeatureTemplateConfig {
    fn default() -> Self {
        FeatureTemplateConfig {
            use_current_token: true,
            context_window: [-1, 0, 1].into_iter().collect(),
            affix_lengths: [2, 3].into_iter().collect(),
            shape_has_digit: true,
            shape_hyphen_adjacent: true,
            shape_is_punct: true,
            bias: true,
        }
    }
}

impl FeatureTemplateConfig {
    /// Bare one-hot token identity: `w0=` only.
    pub fn identity_only() -> Self {
        FeatureTemplateConfig {
            use_current_token: true,
            context_window: [0].into_iter().collect(),
            affix_lengths: BTreeSet::new(),
            shape_has_digit: false,
            shape_hyphen_adjacent: false,
            shape_is_punct: false,
            bias: false,
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.use_current_token
            && self.context_window.is_empty()
            && self.affix_lengths.iter().all(|&k| k == 0)
            && !self.shape_has_digit
            && !self.shape_hyphen_adjacent
            && !self.shape_is_punct
            && !self.bias
    }
}

fn offset_name(off: i32) -> String {
    match off {
        0 => "w0".to_string(),
        o if o > 0 => format!("w+{o}"),
        o => format!("w{o}"),
    }
}

/// Feature strings for the token at `position`.
pub fn featurize(tokens: &[Token], position: usize, template: &FeatureTemplateConfig) -> Vec<String> {
    let tk = Tokenizer::default();
    let mut out = Vec::new();
    let word = tokens[position].as_str();
    if template.bias {
        out.push("bias".to_string());
    }
    let mut offsets = template.context_window.clone();
    if template.use_current_token {
        offsets.insert(0);
    }
    for off in offsets {
        let at = position as i64 + off as i64;
        let text = if at < 0 {
            BOS
        } else if at as usize >= tokens.len() {
            EOS
        } else {
            tokens[at as usize].as_str()
        };
        out.push(format!("{}={text}", offset_name(off)));
    }
    let chars: Vec<char> = word.chars().collect();
    for &k in &template.affix_lengths {
        if k == 0 || chars.len() < k {
            continue;
        }
        let pre: String = chars[..k].iter().collect();
        let suf: String = chars[chars.len() - k..].iter().collect();
        out.push(format!("pre{k}={pre}"));
        out.push(format!("suf{k}={suf}"));
    }
    if template.shape_is_punct && tk.is_punctuation_token(word) {
        out.push("shape=punct".to_string());
    }
    if template.shape_has_digit && word.chars().any(|c| c.is_ascii_digit()) {
        out.push("shape=digit".to_string());
    }
    if template.shape_hyphen_adjacent {
        let is_hyphen = |i: Option<usize>| i.and_then(|i| tokens.get(i)).is_some_and(|t| t.text == "-");
        if is_hyphen(position.checked_sub(1)) || is_hyphen(Some(position + 1)) {
            out.push("shape=hyphen_adj".to_string());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::tokenize;

    #[test]
    fn boundary_sentinels() {
        let f = featurize(&tokenize("HEROIN"), 0, &FeatureTemplateConfig::default());
        for want in ["w0=HEROIN", "w-1=<BOS>", "w+1=<EOS>", "bias", "suf3=OIN", "pre2=HE"] {
            assert!(f.iter().any(|x| x == want), "{want} missing from {f:?}");
        }
    }

    #[test]
    fn hyphen_context() {
        let toks = tokenize("7-AMINOCLONAZEPAM");
        let f = featurize(&toks, 1, &FeatureTemplateConfig::default());
        for want in ["w0=-", "shape=punct", "w-1=7", "w+1=AMINOCLONAZEPAM"] {
            assert!(f.iter().any(|x| x == want), "{want} missing from {f:?}");
        }
        let f0 = featurize(&toks, 0, &FeatureTemplateConfig::default());
        assert!(f0.contains(&"shape=digit".to_string()));
        assert!(f0.contains(&"shape=hyphen_adj".to_string()));
        assert!(!f0.contains(&"pre2=7".to_string()));
    }

    #[test]
    fn identity_only_template() {
        let f = featurize(&tokenize("ACUTE HEROIN TOXICITY"), 1, &FeatureTemplateConfig::identity_only());
        assert_eq!(f, ["w0=HEROIN"]);
    }

    #[test]
    fn wide_window() {
        let t = FeatureTemplateConfig {
            context_window: [-2, 2].into_iter().collect(),
            ..FeatureTemplateConfig::identity_only()
        };
        let f = featurize(&tokenize("A B"), 0, &t);
        assert_eq!(f, ["w-2=<BOS>", "w0=A", "w+2=<EOS>"]);
    }
}

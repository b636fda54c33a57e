//! Deterministic word tokenizer shared by alignment, training and metrics.

use serde::{Deserialize, Serialize};

/// A sequence of non-empty surface tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    /// Builds a sequence from already-split tokens. Empty tokens are discarded.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(
            tokens
                .into_iter()
                .map(Into::into)
                .filter(|t: &String| !t.is_empty())
                .collect(),
        )
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Joins tokens with single spaces.
    pub fn detokenize(&self) -> String {
        self.0.join(" ")
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }
}

impl std::ops::Index<usize> for TokenSequence {
    type Output = String;
    fn index(&self, i: usize) -> &String {
        &self.0[i]
    }
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2013}' | '\u{2014}' | '\u{2026}' | '\u{00AB}' | '\u{00BB}'
        )
}

/// Splits on whitespace, then peels leading and trailing punctuation into
/// standalone single-character tokens. Inner punctuation (hyphens,
/// apostrophes, decimal points) stays attached.
pub fn tokenize(text: &str) -> TokenSequence {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && is_punct(chars[start]) {
            start += 1;
        }
        while end > start && is_punct(chars[end - 1]) {
            end -= 1;
        }
        for c in &chars[..start] {
            out.push(c.to_string());
        }
        if start < end {
            out.push(chars[start..end].iter().collect());
        }
        for c in &chars[end..] {
            out.push(c.to_string());
        }
    }
    TokenSequence(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \n\t").is_empty());
    }

    #[test]
    fn hyphen_kept_punct_split() {
        assert_eq!(
            tokenize("well-known fact.").tokens(),
            &["well-known", "fact", "."]
        );
        assert_eq!(tokenize("He ran").tokens(), &["He", "ran"]);
    }

    #[test]
    fn leading_and_trailing_punct() {
        assert_eq!(
            tokenize("(\"Hi!\") don't 3.5%").tokens(),
            &["(", "\"", "Hi", "!", "\"", ")", "don't", "3.5", "%"]
        );
        assert_eq!(tokenize("...").tokens(), &[".", ".", "."]);
    }

    proptest! {
        #[test]
        fn idempotent_on_own_output(s in "[a-zA-Z .,!?'()-]{0,40}") {
            let once = tokenize(&s);
            let twice = tokenize(&once.detokenize());
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.iter().all(|t| !t.is_empty()));
        }
    }
}

//! Word vocabulary with fixed special tokens.

use std::collections::{BTreeMap, HashMap};

use crate::edit_ops::{DELETE_CLOSE, DELETE_OPEN, MASK, PAD, VERB_CLOSE, VERB_OPEN};

pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";

/// Special tokens, always ids `0..8` in this order.
pub const SPECIALS: [&str; 8] = [PAD, UNK, CLS, MASK, DELETE_OPEN, DELETE_CLOSE, VERB_OPEN, VERB_CLOSE];

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const MASK_ID: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    /// Specials followed by the most frequent words (count descending, then
    /// lexicographic), capped at `max_size` entries in total.
    pub fn build<'a>(words: impl IntoIterator<Item = &'a str>, max_size: usize) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for w in words {
            if !SPECIALS.contains(&w) {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let room = max_size.saturating_sub(SPECIALS.len());
        let tokens = SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(ranked.into_iter().take(room).map(|(w, _)| w.to_string()))
            .collect();
        Self::from_tokens(tokens).expect("built vocabularies are well formed")
    }

    /// Rebuilds a vocabulary from its id-ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, String> {
        if tokens.len() < SPECIALS.len() || tokens.iter().zip(SPECIALS).any(|(t, s)| t != s) {
            return Err("vocabulary does not start with the special tokens".into());
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(format!("duplicate vocabulary entry {t:?}"));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> &str {
        self.tokens.get(id as usize).map_or(UNK, String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn is_special(id: u32) -> bool {
        (id as usize) < SPECIALS.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specials_first_then_frequency() {
        let v = Vocab::build("b a b c b a".split(' '), 100);
        assert_eq!(&v.tokens()[..3], &["[PAD]", "[UNK]", "[CLS]"]);
        assert_eq!(v.token(3), "[MASK]");
        assert_eq!(&v.tokens()[8..], &["b", "a", "c"]);
        assert_eq!(v.id("zzz"), UNK_ID);
        assert_eq!(v.encode(&["a", "[MASK]"]), vec![9, MASK_ID]);
    }

    #[test]
    fn cap_and_round_trip() {
        let v = Vocab::build("b a b c b a".split(' '), 9);
        assert_eq!(v.len(), 9);
        assert_eq!(v.id("a"), UNK_ID);
        assert_eq!(Vocab::from_tokens(v.tokens().to_vec()).unwrap(), v);
        assert!(Vocab::from_tokens(vec!["x".into()]).is_err());
    }
}

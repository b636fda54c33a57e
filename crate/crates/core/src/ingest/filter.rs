use serde::{Deserialize, Serialize};

use super::{DropReason, SentencePair};
use crate::edit_ops::tokenize;
use crate::metrics::bleu;

/// Thresholds for [`filter_pair`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Minimum BLEU of target against source.
    pub bleu_min: f64,
    /// Maximum BLEU of target against source.
    pub bleu_max: f64,
    /// Maximum ratio between the longer and the shorter token count.
    pub len_ratio: f64,
    /// Maximum BLEU of the comment against the source sentence.
    pub comment_sim_max: f64,
    /// Intents for which the length ratio is not enforced.
    pub len_ratio_exempt: Vec<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            bleu_min: 0.2,
            bleu_max: 0.95,
            len_ratio: 3.0,
            comment_sim_max: 0.6,
            len_ratio_exempt: vec!["simplification".to_string()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairDisposition {
    Keep,
    Drop(DropReason),
}

const MONTHS: [&str; 24] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september", "october",
    "november", "december", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
];

const WEEKDAYS: [&str; 7] = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"];

fn is_number_or_time(token: &str) -> bool {
    let lower = token.to_lowercase();
    if MONTHS.contains(&lower.as_str()) || WEEKDAYS.contains(&lower.as_str()) {
        return true;
    }
    if !lower.chars().any(|c| c.is_ascii_digit()) {
        return false;
    }
    let body = ["st", "nd", "rd", "th", "s"]
        .iter()
        .find_map(|suf| lower.strip_suffix(suf))
        .unwrap_or(&lower);
    body.chars().all(|c| c.is_ascii_digit() || ",.:-/%".contains(c))
}

/// Tokens outside a longest common subsequence of `a` and `b`.
fn differing_tokens<'a>(a: &'a [String], b: &'a [String]) -> Vec<&'a str> {
    let (n, m) = (a.len(), b.len());
    let mut lcs = vec![0u32; (n + 1) * (m + 1)];
    let at = |i: usize, j: usize| i * (m + 1) + j;
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[at(i, j)] = if a[i] == b[j] {
                lcs[at(i + 1, j + 1)] + 1
            } else {
                lcs[at(i + 1, j)].max(lcs[at(i, j + 1)])
            };
        }
    }
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        if i < n && j < m && a[i] == b[j] {
            i += 1;
            j += 1;
        } else if j == m || (i < n && lcs[at(i + 1, j)] >= lcs[at(i, j + 1)]) {
            out.push(a[i].as_str());
            i += 1;
        } else {
            out.push(b[j].as_str());
            j += 1;
        }
    }
    out
}

/// True when the token counts of source and target are within
/// `cfg.len_ratio` of each other.
pub fn length_ratio_ok(pair: &SentencePair, cfg: &FilterConfig) -> bool {
    let ls = tokenize(&pair.source).len() as f64;
    let lt = tokenize(&pair.target).len() as f64;
    ls.max(lt) <= cfg.len_ratio * ls.min(lt)
}

/// Decides whether a sentence pair is a usable edit example.
///
/// Checks, in order: both sides non-empty and different; the edit is not
/// only a change of numbers or dates; BLEU of target against source lies in
/// `[bleu_min, bleu_max]`; the length ratio (only once the pair carries an
/// intent that is not exempt, since intents are assigned after ingestion);
/// the comment is not mostly a copy of the source sentence.
pub fn filter_pair(p: &SentencePair, cfg: &FilterConfig) -> PairDisposition {
    use PairDisposition::Drop;
    let src = tokenize(&p.source);
    let tgt = tokenize(&p.target);
    if src.is_empty() || tgt.is_empty() {
        return Drop(DropReason::EmptySide);
    }
    if src == tgt {
        return Drop(DropReason::Identical);
    }
    if differing_tokens(src.tokens(), tgt.tokens())
        .iter()
        .all(|t| is_number_or_time(t))
    {
        return Drop(DropReason::NumberOrTime);
    }
    let b = bleu(&p.target, &p.source);
    if b < cfg.bleu_min {
        return Drop(DropReason::BleuBelowMin);
    }
    if b > cfg.bleu_max {
        return Drop(DropReason::BleuAboveMax);
    }
    if let Some(intent) = &p.intent {
        if !cfg.len_ratio_exempt.contains(intent) && !length_ratio_ok(p, cfg) {
            return Drop(DropReason::LengthRatio);
        }
    }
    if bleu(&p.comment, &p.source) > cfg.comment_sim_max {
        return Drop(DropReason::CommentSimilarity);
    }
    PairDisposition::Keep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(s: &str, t: &str, c: &str) -> SentencePair {
        SentencePair {
            source: s.into(),
            target: t.into(),
            comment: c.into(),
            intent: None,
        }
    }

    #[test]
    fn number_only_change() {
        let p = pair("we built 2 units", "we built 3 units", "update");
        assert_eq!(filter_pair(&p, &FilterConfig::default()), PairDisposition::Drop(DropReason::NumberOrTime));
        let p = pair("It opened on May 5, 1990.", "It opened on June 7, 1991.", "date");
        assert_eq!(filter_pair(&p, &FilterConfig::default()), PairDisposition::Drop(DropReason::NumberOrTime));
    }

    #[test]
    fn unrelated_sentences() {
        let p = pair("the cat sat", "dogs bark loudly", "x");
        assert_eq!(filter_pair(&p, &FilterConfig::default()), PairDisposition::Drop(DropReason::BleuBelowMin));
    }

    #[test]
    fn fluency_pair_kept() {
        let p = pair(
            "At the end of the 1986 season, he announced that would retire after completing the 1987 NFL season.",
            "At the end of the 1986 season, he announced that he would retire after completing the 1987 NFL season.",
            "grammar",
        );
        assert_eq!(filter_pair(&p, &FilterConfig::default()), PairDisposition::Keep);
    }

    #[test]
    fn comment_copying_source() {
        let s = "the old bridge was closed for repairs last year";
        let p = pair(s, "the old bridge was shut for repairs last year", s);
        assert_eq!(
            filter_pair(&p, &FilterConfig::default()),
            PairDisposition::Drop(DropReason::CommentSimilarity)
        );
    }

    #[test]
    fn length_ratio_by_intent() {
        let cfg = FilterConfig {
            bleu_min: 0.0,
            ..FilterConfig::default()
        };
        let mut p = pair(
            "a b c d e f g h i j k l",
            "a b c",
            "shorten",
        );
        assert_eq!(filter_pair(&p, &cfg), PairDisposition::Keep);
        p.intent = Some("fluency".into());
        assert_eq!(filter_pair(&p, &cfg), PairDisposition::Drop(DropReason::LengthRatio));
        p.intent = Some("simplification".into());
        assert_eq!(filter_pair(&p, &cfg), PairDisposition::Keep);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<FilterConfig>(r#"{"bleu_mn":0.1}"#).is_err());
        let c: FilterConfig = serde_json::from_str(r#"{"bleu_min":0.1}"#).unwrap();
        assert_eq!(c.bleu_max, 0.95);
    }
}

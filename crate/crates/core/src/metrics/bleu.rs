use super::ngram_counts;
use crate::edit_ops::tokenize;

/// Sentence BLEU in [0, 1] over 1..4-grams.
///
/// Unigram precision is unsmoothed; higher orders use add-one smoothing.
/// The brevity penalty applies when the candidate is not longer than the
/// reference.
pub fn bleu(candidate: &str, reference: &str) -> f64 {
    bleu_tokens(tokenize(candidate).tokens(), tokenize(reference).tokens())
}

pub(crate) fn bleu_tokens(cand: &[String], reference: &[String]) -> f64 {
    if cand.is_empty() {
        return if reference.is_empty() { 1.0 } else { 0.0 };
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let c = ngram_counts(cand, n);
        let r = ngram_counts(reference, n);
        let matched: f64 = c
            .iter()
            .map(|(g, v)| v.min(r.get(g).copied().unwrap_or(0.0)))
            .sum();
        let total: f64 = c.values().sum();
        let p = if n == 1 {
            matched / total
        } else {
            (matched + 1.0) / (total + 1.0)
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln() / 4.0;
    }
    let bp = if cand.len() > reference.len() {
        1.0
    } else {
        (1.0 - reference.len() as f64 / cand.len() as f64).exp()
    };
    bp * log_sum.exp()
}

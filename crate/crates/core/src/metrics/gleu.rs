use super::{ngram_counts, EvalInstance, MetricsError};
use crate::edit_ops::tokenize;

fn gleu_single(src: &[String], pred: &[String], reference: &[String]) -> f64 {
    if pred.is_empty() {
        return if reference.is_empty() { 100.0 } else { 0.0 };
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let h = ngram_counts(pred, n);
        let r = ngram_counts(reference, n);
        let s = ngram_counts(src, n);
        let mut reward = 0.0;
        let mut penalty = 0.0;
        for (g, hv) in &h {
            let rv = r.get(g).copied().unwrap_or(0.0);
            reward += hv.min(rv);
            let source_only = (s.get(g).copied().unwrap_or(0.0) - rv).max(0.0);
            penalty += hv.min(source_only);
        }
        let total = (pred.len() + 1).saturating_sub(n);
        let p = if total == 0 {
            if r.is_empty() {
                1.0
            } else {
                0.0
            }
        } else {
            (reward - penalty).max(0.0) / total as f64
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln() / 4.0;
    }
    let bp = (1.0 - reference.len() as f64 / pred.len() as f64).min(0.0);
    (bp + log_sum).exp() * 100.0
}

/// GLEU in [0, 100], averaged over references.
///
/// Per order, matches against the reference are rewarded and n-grams that
/// the source has but the reference lacks are subtracted (floored at 0).
pub fn gleu(instance: &EvalInstance) -> Result<f64, MetricsError> {
    if instance.references.is_empty() {
        return Err(MetricsError::EmptyReferenceSet);
    }
    let src = tokenize(&instance.source);
    let pred = tokenize(&instance.prediction);
    let mut scores: Vec<f64> = instance
        .references
        .iter()
        .map(|r| gleu_single(src.tokens(), pred.tokens(), tokenize(r).tokens()))
        .collect();
    // summation order fixed so that reference order cannot change the result
    scores.sort_by(f64::total_cmp);
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

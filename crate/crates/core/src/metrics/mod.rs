//! Reference-based scoring: SARI, GLEU, exact match and sentence BLEU.
//!
//! All n-gram metrics operate on [`tokenize`](crate::edit_ops::tokenize)d
//! text. Counting uses ordered maps so float accumulation order, and hence
//! every reported digit, is reproducible.

mod bleu;
mod gleu;
mod report;
mod sari;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use bleu::bleu;
pub use gleu::gleu;
pub use report::{evaluate, read_instances, DatasetReport, EvalReport, InstanceScores, MetricSelection};
pub use sari::sari;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("instance has no references")]
    EmptyReferenceSet,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalInstance {
    pub source: String,
    pub prediction: String,
    pub references: Vec<String>,
}

impl EvalInstance {
    pub fn new(source: &str, prediction: &str, references: &[&str]) -> Self {
        Self {
            source: source.to_string(),
            prediction: prediction.to_string(),
            references: references.iter().map(|r| r.to_string()).collect(),
        }
    }
}

/// 100 if the whitespace-collapsed prediction equals any reference, else 0.
pub fn exact_match(instance: &EvalInstance) -> f64 {
    let pred = collapse(&instance.prediction);
    if instance.references.iter().any(|r| collapse(r) == pred) {
        100.0
    } else {
        0.0
    }
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub(crate) type Counts<'a> = BTreeMap<&'a [String], f64>;

pub(crate) fn ngram_counts(tokens: &[String], n: usize) -> Counts<'_> {
    let mut out = Counts::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w).or_insert(0.0) += 1.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_match_cases() {
        assert_eq!(exact_match(&EvalInstance::new("x", "a b", &["a b"])), 100.0);
        assert_eq!(exact_match(&EvalInstance::new("x", "a b", &["a c"])), 0.0);
        assert_eq!(exact_match(&EvalInstance::new("x", "a  b ", &["z", "a b"])), 100.0);
    }

    #[test]
    fn counts_short_sequences() {
        let t: Vec<String> = vec!["a".into(), "a".into()];
        assert!(ngram_counts(&t, 3).is_empty());
        assert_eq!(ngram_counts(&t, 1).values().sum::<f64>(), 2.0);
    }
}

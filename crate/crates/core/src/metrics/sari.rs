use std::collections::BTreeSet;

use super::{ngram_counts, Counts, EvalInstance, MetricsError};
use crate::edit_ops::tokenize;

/// Ratio with the 0/0 convention: 1 when the opposite side is empty too.
fn ratio(num: f64, den: usize, other_empty: bool) -> f64 {
    if den == 0 {
        if other_empty {
            1.0
        } else {
            0.0
        }
    } else {
        num / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn scaled<'a>(c: &Counts<'a>, k: f64) -> Counts<'a> {
    c.iter().map(|(g, v)| (*g, v * k)).collect()
}

fn intersect<'a>(a: &Counts<'a>, b: &Counts<'a>) -> Counts<'a> {
    a.iter()
        .filter_map(|(g, v)| b.get(g).map(|w| (*g, v.min(*w))))
        .filter(|(_, v)| *v > 0.0)
        .collect()
}

fn subtract<'a>(a: &Counts<'a>, b: &Counts<'a>) -> Counts<'a> {
    a.iter()
        .map(|(g, v)| (*g, v - b.get(g).copied().unwrap_or(0.0)))
        .filter(|(_, v)| *v > 0.0)
        .collect()
}

/// (keep F1, deletion precision, addition F1) for one n-gram order.
fn components(src: &[String], pred: &[String], refs: &[Vec<String>], n: usize) -> (f64, f64, f64) {
    let numref = refs.len() as f64;
    let s = ngram_counts(src, n);
    let c = ngram_counts(pred, n);
    let mut r = Counts::new();
    for rt in refs {
        for (g, v) in ngram_counts(rt, n) {
            *r.entry(g).or_insert(0.0) += v;
        }
    }
    let s_rep = scaled(&s, numref);
    let c_rep = scaled(&c, numref);

    let keep = intersect(&s_rep, &c_rep);
    let keep_good = intersect(&keep, &r);
    let keep_all = intersect(&s_rep, &r);
    let kp: f64 = keep_good.iter().map(|(g, v)| v / keep[g]).sum();
    let kr: f64 = keep_good.iter().map(|(g, v)| v / keep_all[g]).sum();
    let keep_score = f1(
        ratio(kp, keep.len(), keep_all.is_empty()),
        ratio(kr, keep_all.len(), keep.is_empty()),
    );

    let del = subtract(&s_rep, &c_rep);
    let del_good = subtract(&del, &r);
    let del_all = subtract(&s_rep, &r);
    let dp: f64 = del_good.iter().map(|(g, v)| v / del[g]).sum();
    let del_score = ratio(dp, del.len(), del_all.is_empty());

    let s_set: BTreeSet<_> = s.keys().collect();
    let r_set: BTreeSet<_> = r.keys().collect();
    let add: BTreeSet<_> = c.keys().filter(|g| !s_set.contains(g)).collect();
    let add_good = add.iter().filter(|g| r_set.contains(**g)).count();
    let add_all = r_set.iter().filter(|g| !s_set.contains(*g)).count();
    let add_score = f1(
        ratio(add_good as f64, add.len(), add_all == 0),
        ratio(add_good as f64, add_all, add.is_empty()),
    );
    (keep_score, del_score, add_score)
}

/// SARI in [0, 100]: mean of keep F1, deletion precision and addition F1,
/// each averaged over n = 1..4.
///
/// Source and prediction n-gram counts are scaled by the number of
/// references so that partial agreement among references earns partial
/// credit.
pub fn sari(instance: &EvalInstance) -> Result<f64, MetricsError> {
    if instance.references.is_empty() {
        return Err(MetricsError::EmptyReferenceSet);
    }
    let src = tokenize(&instance.source);
    let pred = tokenize(&instance.prediction);
    let refs: Vec<Vec<String>> = instance
        .references
        .iter()
        .map(|r| tokenize(r).into_inner())
        .collect();
    let (mut keep, mut del, mut add) = (0.0, 0.0, 0.0);
    for n in 1..=4 {
        let (k, d, a) = components(src.tokens(), pred.tokens(), &refs, n);
        keep += k;
        del += d;
        add += a;
    }
    Ok((keep + del + add) / 12.0 * 100.0)
}

//! Metric fixtures and a naive second implementation.
//!
//! The fixture values were produced by a separate hand-counting script
//! before the library code existed. The `naive` module below recounts
//! n-grams with plain vectors and linear scans; the property tests check
//! that both routes agree.

mod common;

use common::metric_fixtures::{BLEU_FIXTURES, GLEU_FIXTURES, SARI_FIXTURES};
use proptest::prelude::*;
use sparsedit::metrics::{bleu, exact_match, gleu, sari, EvalInstance, MetricsError};

const TOL: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

mod naive {
    fn grams(toks: &[&str], n: usize) -> Vec<Vec<String>> {
        if toks.len() < n {
            return vec![];
        }
        (0..=toks.len() - n)
            .map(|i| toks[i..i + n].iter().map(|s| s.to_string()).collect())
            .collect()
    }

    fn count(list: &[Vec<String>], g: &[String]) -> f64 {
        list.iter().filter(|x| x.as_slice() == g).count() as f64
    }

    fn distinct(list: &[Vec<String>]) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = Vec::new();
        for g in list {
            if !out.contains(g) {
                out.push(g.clone());
            }
        }
        out
    }

    fn safe(num: f64, den: f64, other_empty: bool) -> f64 {
        if den == 0.0 {
            if other_empty { 1.0 } else { 0.0 }
        } else {
            num / den
        }
    }

    fn f1(p: f64, r: f64) -> f64 {
        if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) }
    }

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    pub fn sari(src: &str, pred: &str, refs: &[&str]) -> f64 {
        let k = refs.len() as f64;
        let (s, c) = (toks(src), toks(pred));
        let mut total = 0.0;
        for n in 1..=4 {
            let sg = grams(&s, n);
            let cg = grams(&c, n);
            let rg: Vec<Vec<String>> = refs.iter().flat_map(|r| grams(&toks(r), n)).collect();
            let mut universe = distinct(&sg);
            universe.extend(distinct(&cg));
            universe.extend(distinct(&rg));
            let universe = distinct(&universe);

            let (mut kp, mut kr, mut nk, mut nka) = (0.0, 0.0, 0.0, 0.0);
            let (mut dp, mut nd, mut nda) = (0.0, 0.0, 0.0);
            let (mut add, mut add_good, mut add_all) = (0.0, 0.0, 0.0);
            for g in &universe {
                let (sc, cc, rc) = (count(&sg, g) * k, count(&cg, g) * k, count(&rg, g));
                let keep = sc.min(cc);
                let keep_all = sc.min(rc);
                let keep_good = keep.min(rc);
                if keep > 0.0 {
                    nk += 1.0;
                    kp += keep_good / keep;
                }
                if keep_all > 0.0 {
                    nka += 1.0;
                    kr += keep_good / keep_all;
                }
                let del = (sc - cc).max(0.0);
                let del_all = (sc - rc).max(0.0);
                let del_good = (del - rc).max(0.0);
                if del > 0.0 {
                    nd += 1.0;
                    dp += del_good / del;
                }
                if del_all > 0.0 {
                    nda += 1.0;
                }
                let in_s = sc > 0.0;
                if cc > 0.0 && !in_s {
                    add += 1.0;
                    if rc > 0.0 {
                        add_good += 1.0;
                    }
                }
                if rc > 0.0 && !in_s {
                    add_all += 1.0;
                }
            }
            let keep_score = f1(safe(kp, nk, nka == 0.0), safe(kr, nka, nk == 0.0));
            let del_score = safe(dp, nd, nda == 0.0);
            let add_score = f1(safe(add_good, add, add_all == 0.0), safe(add_good, add_all, add == 0.0));
            total += keep_score + del_score + add_score;
        }
        total / 12.0 * 100.0
    }

    pub fn gleu(src: &str, pred: &str, refs: &[&str]) -> f64 {
        let (s, c) = (toks(src), toks(pred));
        let mut per_ref: Vec<f64> = Vec::new();
        for r in refs {
            let r = toks(r);
            if c.is_empty() {
                per_ref.push(if r.is_empty() { 100.0 } else { 0.0 });
                continue;
            }
            let mut prod = 1.0f64;
            for n in 1..=4 {
                let (hg, rg, sg) = (grams(&c, n), grams(&r, n), grams(&s, n));
                let mut num = 0.0;
                for g in distinct(&hg) {
                    let h = count(&hg, &g);
                    let rc = count(&rg, &g);
                    num += h.min(rc) - h.min((count(&sg, &g) - rc).max(0.0));
                }
                let p = if hg.is_empty() {
                    if rg.is_empty() { 1.0 } else { 0.0 }
                } else {
                    num.max(0.0) / hg.len() as f64
                };
                prod *= p;
            }
            let bp = (1.0 - r.len() as f64 / c.len() as f64).min(0.0).exp();
            per_ref.push(bp * prod.powf(0.25) * 100.0);
        }
        per_ref.iter().sum::<f64>() / per_ref.len() as f64
    }

    pub fn bleu(cand: &str, reference: &str) -> f64 {
        let (c, r) = (toks(cand), toks(reference));
        if c.is_empty() {
            return if r.is_empty() { 1.0 } else { 0.0 };
        }
        let mut prod = 1.0f64;
        for n in 1..=4 {
            let (cg, rg) = (grams(&c, n), grams(&r, n));
            let m: f64 = distinct(&cg).iter().map(|g| count(&cg, g).min(count(&rg, g))).sum();
            let t = cg.len() as f64;
            prod *= if n == 1 { m / t } else { (m + 1.0) / (t + 1.0) };
        }
        let bp = if c.len() > r.len() { 1.0 } else { (1.0 - r.len() as f64 / c.len() as f64).exp() };
        bp * prod.powf(0.25)
    }
}

fn inst(s: &str, p: &str, refs: &[&str]) -> EvalInstance {
    EvalInstance::new(s, p, refs)
}

#[test]
fn sari_fixtures() {
    for (s, p, r, want) in SARI_FIXTURES {
        let got = sari(&inst(s, p, r)).unwrap();
        assert!(close(got, want), "{s} / {p}: {got} vs {want}");
        assert!(close(naive::sari(s, p, r), want));
    }
}

#[test]
fn gleu_fixtures() {
    for (s, p, r, want) in GLEU_FIXTURES {
        let got = gleu(&inst(s, p, r)).unwrap();
        assert!(close(got, want), "{s} / {p}: {got} vs {want}");
        assert!(close(naive::gleu(s, p, r), want));
    }
}

#[test]
fn bleu_fixtures() {
    for (c, r, want) in BLEU_FIXTURES {
        let got = bleu(c, r);
        assert!(close(got, want), "{c} / {r}: {got} vs {want}");
        assert!(close(naive::bleu(c, r), want));
    }
}

#[test]
fn empty_reference_set_is_an_error() {
    let i = EvalInstance {
        source: "a".into(),
        prediction: "a".into(),
        references: vec![],
    };
    assert_eq!(sari(&i), Err(MetricsError::EmptyReferenceSet));
    assert_eq!(gleu(&i), Err(MetricsError::EmptyReferenceSet));
}

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 0..7).prop_map(|v| v.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn library_matches_naive(
        s in sentence(),
        p in sentence(),
        refs in prop::collection::vec(sentence(), 1..4),
    ) {
        let r: Vec<&str> = refs.iter().map(String::as_str).collect();
        let i = inst(&s, &p, &r);
        prop_assert!(close(sari(&i).unwrap(), naive::sari(&s, &p, &r)));
        prop_assert!(close(gleu(&i).unwrap(), naive::gleu(&s, &p, &r)));
        prop_assert!(close(bleu(&p, r[0]), naive::bleu(&p, r[0])));
    }

    #[test]
    fn bounded_and_reference_symmetric(
        s in sentence(),
        p in sentence(),
        refs in prop::collection::vec(sentence(), 1..4),
    ) {
        let r: Vec<&str> = refs.iter().map(String::as_str).collect();
        let mut rev = r.clone();
        rev.reverse();
        let (a, b) = (inst(&s, &p, &r), inst(&s, &p, &rev));
        let (sa, ga) = (sari(&a).unwrap(), gleu(&a).unwrap());
        prop_assert!((0.0..=100.0).contains(&sa));
        prop_assert!((0.0..=100.0).contains(&ga));
        prop_assert!((0.0..=1.0).contains(&bleu(&p, &s)));
        prop_assert_eq!(sa, sari(&b).unwrap());
        prop_assert_eq!(ga, gleu(&b).unwrap());
        prop_assert_eq!(exact_match(&a), exact_match(&b));
    }

    // Holds when the source repeats no token. With a repeated source n-gram
    // that is only partly deleted, deleted copies still present in the
    // reference count against deletion precision (see below).
    #[test]
    fn exact_match_implies_perfect_sari(
        s in Just(vec!["a", "b", "c", "d", "e", "f"]).prop_shuffle().prop_flat_map(|v| (0..6usize).prop_map(move |k| v[..k].join(" "))),
        p in sentence(),
    ) {
        let i = inst(&s, &p, &[p.as_str()]);
        prop_assert_eq!(exact_match(&i), 100.0);
        prop_assert!(close(sari(&i).unwrap(), 100.0));
    }
}

#[test]
fn partial_deletion_of_repeated_source_ngram() {
    // deletion n=1: deleted "d" is still in the reference, so P_del = 0
    let i = inst("d d", "d", &["d"]);
    assert_eq!(exact_match(&i), 100.0);
    assert!(close(sari(&i).unwrap(), (1.0 + 0.75 + 1.0) / 3.0 * 100.0));
}

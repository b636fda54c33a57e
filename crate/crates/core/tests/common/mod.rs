#![allow(dead_code)]

pub mod kmeans_oracle;
pub mod metric_fixtures;

use rand::seq::SliceRandom;
use rand::Rng;
use sparsedit::edit_ops::verbs::detect_verb_change;
use sparsedit::edit_ops::{apply_transform, TagSet, TokenSequence};

const WORDS: [&str; 24] = [
    "the", "dog", "cat", "run", "go", "went", "big", "well", "known", "nasa", "iPhone", "house", "child",
    "walk", "walked", "is", "are", "a", "of", "well-known", "New", "york", "two", "apple",
];

const VARIANTS: [&str; 16] = [
    "Dog", "dogs", "DOG", "ran", "running", "runs", "Cats", "NASA", "iphone", "children", "walking", "was",
    "Well", "York", "apples", "new-york",
];

fn word<R: Rng>(rng: &mut R) -> String {
    if rng.gen_bool(0.8) {
        WORDS.choose(rng).unwrap().to_string()
    } else {
        VARIANTS.choose(rng).unwrap().to_string()
    }
}

/// A random source and an edited target built from 0..=5 random
/// operations (word edits, case changes, inflections, hyphen splits and
/// merges), or occasionally an unrelated sentence.
pub fn fuzz_pair<R: Rng>(rng: &mut R) -> (TokenSequence, TokenSequence) {
    let n = rng.gen_range(0..=12);
    let src: Vec<String> = (0..n).map(|_| word(rng)).collect();
    if rng.gen_bool(0.05) {
        let m = rng.gen_range(0..=12);
        let tgt: Vec<String> = (0..m).map(|_| word(rng)).collect();
        return (TokenSequence::from_tokens(src), TokenSequence::from_tokens(tgt));
    }
    let mut tgt = src.clone();
    for _ in 0..rng.gen_range(0..=5) {
        let len = tgt.len();
        match rng.gen_range(0..8) {
            0 if len > 0 => {
                tgt.remove(rng.gen_range(0..len));
            }
            1 => {
                let w = word(rng);
                tgt.insert(rng.gen_range(0..=len), w);
            }
            2 if len > 0 => {
                let i = rng.gen_range(0..len);
                tgt[i] = word(rng);
            }
            3 if len > 0 => {
                let i = rng.gen_range(0..len);
                let mut c = tgt[i].chars();
                if let Some(f) = c.next() {
                    tgt[i] = f.to_uppercase().chain(c).collect();
                }
            }
            4 if len > 0 => {
                let i = rng.gen_range(0..len);
                tgt[i].push('s');
            }
            5 if len > 1 => {
                let i = rng.gen_range(0..len - 1);
                let merged = format!("{}-{}", tgt[i], tgt[i + 1]);
                tgt.splice(i..i + 2, [merged]);
            }
            6 if len > 0 => {
                let i = rng.gen_range(0..len);
                if let Some((a, b)) = tgt[i].clone().split_once('-') {
                    tgt.splice(i..i + 1, [a.to_string(), b.to_string()]);
                }
            }
            7 if len > 0 => {
                let i = rng.gen_range(0..len);
                tgt[i] = tgt[i].to_uppercase();
            }
            _ => {}
        }
    }
    (TokenSequence::from_tokens(src), TokenSequence::from_tokens(tgt))
}

const SMALL: [&str; 3] = ["dog", "run", "big"];
const SMALL_VARIANTS: [&str; 8] = ["Dog", "dogs", "ran", "runs", "Run", "BIG", "big-dog", "dog-run"];

fn small_word<R: Rng>(rng: &mut R) -> String {
    if rng.gen_bool(0.7) {
        SMALL.choose(rng).unwrap().to_string()
    } else {
        SMALL_VARIANTS.choose(rng).unwrap().to_string()
    }
}

/// Pairs with at most six tokens per side over a three-word alphabet and
/// some of its transformed variants.
pub fn small_pair<R: Rng>(rng: &mut R) -> (TokenSequence, TokenSequence) {
    let n = rng.gen_range(0..=6);
    let m = rng.gen_range(0..=6);
    let src: Vec<String> = (0..n).map(|_| small_word(rng)).collect();
    let tgt: Vec<String> = if rng.gen_bool(0.5) {
        (0..m).map(|_| small_word(rng)).collect()
    } else {
        // perturb the source a little so transforms line up
        let mut t = src.clone();
        for _ in 0..rng.gen_range(1..=3) {
            if t.is_empty() || rng.gen_bool(0.3) {
                let w = small_word(rng);
                let at = rng.gen_range(0..=t.len());
                t.insert(at, w);
            } else {
                let i = rng.gen_range(0..t.len());
                t[i] = small_word(rng);
            }
        }
        t.truncate(6);
        t
    };
    (TokenSequence::from_tokens(src), TokenSequence::from_tokens(tgt))
}

/// Minimum plan cost (half units) by enumerating every tag plan that turns
/// `src` into `tgt`.
///
/// A plan picks, for the sentence start, an optional insertion, and for
/// each source token one of: KEEP (optionally followed by an APPEND
/// insertion), DELETE, REPLACE with one or more tokens, or a transform
/// whose output matches the target at the current position. Costs: KEEP 0,
/// transform 1, DELETE 2, each inserted or replacing token 2. No
/// memoization and no cost-based pruning; only plans whose output stays a
/// prefix of the target are followed.
pub fn brute_min_cost(src: &[String], tgt: &[String], tag_set: &TagSet) -> u32 {
    let mut best = u32::MAX;
    for k in 0..=tgt.len() {
        enumerate(src, tgt, tag_set, 0, k, 2 * k as u32, &mut best);
    }
    best
}

fn enumerate(src: &[String], tgt: &[String], tag_set: &TagSet, i: usize, j: usize, cost: u32, best: &mut u32) {
    if i == src.len() {
        if j == tgt.len() {
            *best = (*best).min(cost);
        }
        return;
    }
    let rest = tgt.len() - j;
    // KEEP, with an optional APPEND of k tokens
    if j < tgt.len() && src[i] == tgt[j] {
        for k in 0..rest {
            enumerate(src, tgt, tag_set, i + 1, j + 1 + k, cost + 2 * k as u32, best);
        }
    }
    enumerate(src, tgt, tag_set, i + 1, j, cost + 2, best);
    for k in 1..=rest {
        enumerate(src, tgt, tag_set, i + 1, j + k, cost + 2 * k as u32, best);
    }
    let next = src.get(i + 1).map(String::as_str);
    for t in tag_set.transforms() {
        if t.source_span() > src.len() - i {
            continue;
        }
        if let Ok(out) = apply_transform(t, &src[i], next) {
            if out.len() <= rest && out[..] == tgt[j..j + out.len()] {
                enumerate(src, tgt, tag_set, i + t.source_span(), j + out.len(), cost + 1, best);
            }
        }
    }
    if tag_set.has_coarse_verb() && j < tgt.len() && detect_verb_change(&src[i], &tgt[j]).is_some() {
        enumerate(src, tgt, tag_set, i + 1, j + 1, cost + 1, best);
    }
}

//! Synthetic editing tasks with known answers, for end-to-end checks.
//!
//! Four intents over one shared sentence grammar:
//! - `lowercase`: one word arrives in capitals ("the CAT ran") and is
//!   lowered.
//! - `plural`: a noun after a number word is singular and gets pluralized.
//! - `marker`: a filler token ("um", "uh", "erm") is deleted.
//! - `substitute`: one formal word from a closed list is replaced by its
//!   plain counterpart.
//!
//! Formal words and correct number phrases also occur unchanged in the
//! other intents, so a model must use the intent to decide whether to act.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::edit_ops::{apply_transform, Transform};
use crate::ingest::SentencePair;

pub const INTENTS: [&str; 4] = ["lowercase", "plural", "marker", "substitute"];

const NOUNS: [&str; 24] = [
    "cat", "dog", "bird", "horse", "farmer", "teacher", "student", "driver", "car", "boat", "house", "garden",
    "tree", "river", "road", "book", "song", "ship", "doctor", "painter", "lamp", "chair", "window", "apple",
];
const ADJS: [&str; 10] = ["big", "small", "old", "fast", "smart", "red", "quiet", "happy", "tall", "young"];
const VERBS: [&str; 10] = ["saw", "bought", "got", "helped", "built", "left", "liked", "found", "chased", "painted"];
const NUMBERS: [&str; 5] = ["two", "three", "four", "several", "many"];
const PLACES: [&str; 5] = ["park", "town", "market", "school", "forest"];
const MARKERS: [&str; 3] = ["um", "uh", "erm"];

/// Formal word and its plain replacement. The plain words belong to the
/// base grammar above.
pub const SUBSTITUTIONS: [(&str, &str); 10] = [
    ("enormous", "big"),
    ("minuscule", "small"),
    ("elderly", "old"),
    ("rapid", "fast"),
    ("intelligent", "smart"),
    ("purchased", "bought"),
    ("obtained", "got"),
    ("assisted", "helped"),
    ("constructed", "built"),
    ("departed", "left"),
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Plain,
    Noun,
    Adj,
    Verb,
    Number,
}

struct Sentence {
    words: Vec<(String, Role)>,
}

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty list")
}

fn plural(noun: &str) -> String {
    apply_transform(Transform::AgreementPlural, noun, None)
        .expect("grammar nouns pluralize")
        .remove(0)
}

fn formal_for(plain: &str) -> Option<&'static str> {
    SUBSTITUTIONS.iter().find(|(_, p)| *p == plain).map(|(f, _)| *f)
}

/// A correct sentence: "the [adj] noun verb the [adj] noun [in the place] ."
/// with an optional number phrase as the object.
fn base_sentence(rng: &mut ChaCha8Rng) -> Sentence {
    let mut w: Vec<(String, Role)> = Vec::new();
    let mut push = |s: &str, r: Role| w.push((s.to_string(), r));
    push("the", Role::Plain);
    if rng.gen_bool(0.6) {
        push(pick(rng, &ADJS), Role::Adj);
    }
    push(pick(rng, &NOUNS), Role::Noun);
    push(pick(rng, &VERBS), Role::Verb);
    if rng.gen_bool(0.4) {
        push(pick(rng, &NUMBERS), Role::Number);
        let noun = plural(pick(rng, &NOUNS));
        push(&noun, Role::Plain);
    } else {
        push("the", Role::Plain);
        if rng.gen_bool(0.5) {
            push(pick(rng, &ADJS), Role::Adj);
        }
        push(pick(rng, &NOUNS), Role::Noun);
    }
    if rng.gen_bool(0.3) {
        push("in", Role::Plain);
        push("the", Role::Plain);
        push(pick(rng, &PLACES), Role::Plain);
    }
    push(".", Role::Plain);
    Sentence { words: w }
}

fn join(words: &[String]) -> String {
    words.join(" ")
}

/// Formal-word variants of a sentence's substitutable positions.
fn substitutable(s: &Sentence) -> Vec<usize> {
    s.words
        .iter()
        .enumerate()
        .filter(|(_, (w, r))| matches!(r, Role::Adj | Role::Verb) && formal_for(w).is_some())
        .map(|(i, _)| i)
        .collect()
}

/// One (source, target) pair for `intent` (an index into [`INTENTS`]).
fn make_pair(rng: &mut ChaCha8Rng, intent: usize) -> (String, String) {
    loop {
        let s = base_sentence(rng);
        let mut target: Vec<String> = s.words.iter().map(|(w, _)| w.clone()).collect();
        // Formal words as harmless distractors outside the substitution task.
        if intent != 3 && rng.gen_bool(0.25) {
            if let Some(&i) = substitutable(&s).choose(rng) {
                target[i] = formal_for(&target[i]).expect("substitutable").to_string();
            }
        }
        let mut source = target.clone();
        match intent {
            0 => {
                let cands: Vec<usize> = s
                    .words
                    .iter()
                    .enumerate()
                    .filter(|(i, (_, r))| matches!(r, Role::Noun | Role::Adj | Role::Verb) && target[*i].len() > 1)
                    .map(|(i, _)| i)
                    .collect();
                let &i = cands.choose(rng).expect("every sentence has a noun");
                source[i] = target[i].to_uppercase();
            }
            1 => {
                let Some(num) = s.words.iter().position(|(_, r)| *r == Role::Number) else {
                    // force a number phrase as the object
                    continue;
                };
                let noun = NOUNS.iter().find(|n| plural(n) == target[num + 1]).expect("plural of a grammar noun");
                source[num + 1] = noun.to_string();
            }
            2 => {
                let at = rng.gen_range(1..source.len());
                source.insert(at, pick(rng, &MARKERS).to_string());
            }
            3 => {
                let cands = substitutable(&s);
                let Some(&i) = cands.choose(rng) else { continue };
                source[i] = formal_for(&target[i]).expect("substitutable").to_string();
            }
            _ => panic!("intent index out of range"),
        }
        return (join(&source), join(&target));
    }
}

/// `count` pairs for intent index `intent`, deterministic in `seed`.
pub fn generate(intent: usize, count: usize, seed: u64) -> Vec<SentencePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31).wrapping_add(intent as u64));
    (0..count)
        .map(|_| {
            let (source, target) = make_pair(&mut rng, intent);
            SentencePair {
                source,
                target,
                comment: INTENTS[intent].to_string(),
                intent: Some(INTENTS[intent].to_string()),
            }
        })
        .collect()
}

/// Train and held-out splits for every intent: the first `train` pairs and
/// the next `held_out` of each intent's stream.
pub fn corpus(train: usize, held_out: usize, seed: u64) -> (Vec<SentencePair>, Vec<SentencePair>) {
    let mut tr = Vec::new();
    let mut ho = Vec::new();
    for intent in 0..INTENTS.len() {
        let mut all = generate(intent, train + held_out, seed);
        ho.extend(all.split_off(train));
        tr.extend(all);
    }
    (tr, ho)
}

/// A lowercase-task input with two capitalized words.
pub fn two_error_input() -> (&'static str, &'static str) {
    ("the BIG dog CHASED the cat .", "the big dog chased the cat .")
}

//! Turning training records into encoded examples.

use std::collections::BTreeMap;

use super::config::EncoderConfig;
use super::train::{Example, TaskData};
use super::vocab::{Vocab, CLS, CLS_ID};
use crate::edit_ops::{render_masked_input, tokenize, TagLabel, TagSet, TrainingRecord};

/// Why a record produced no examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SkipReason {
    UnknownIntent,
    BadPlan,
    TagOutsideSet,
    InsertionTooLong,
    TooLong,
}

/// Encodes one record into a tagging example and, when the plan has
/// insertion slots, a generation example.
pub fn encode_record(
    rec: &TrainingRecord,
    vocab: &Vocab,
    tag_set: &TagSet,
    cfg: &EncoderConfig,
) -> Result<(Example, Option<Example>), SkipReason> {
    let source = tokenize(&rec.source);
    let plan = rec.plan().map_err(|_| SkipReason::BadPlan)?;
    if plan.tags.len() != source.len() + 1 {
        return Err(SkipReason::BadPlan);
    }
    let mut tag_target = Vec::with_capacity(plan.tags.len());
    for t in &plan.tags {
        let id = tag_set.index_of(&TagLabel::from(t)).ok_or(SkipReason::TagOutsideSet)?;
        tag_target.push(id as u32);
    }
    let masked = render_masked_input(&source, &plan, cfg.n_masks).map_err(|e| match e {
        crate::edit_ops::EditOpsError::InsertionTooLong { .. } => SkipReason::InsertionTooLong,
        _ => SkipReason::BadPlan,
    })?;
    if source.len() + 1 > cfg.max_seq_len || masked.tokens.len() + 1 > cfg.max_seq_len {
        return Err(SkipReason::TooLong);
    }
    let mut input = vec![CLS_ID];
    input.extend(vocab.encode(source.tokens()));
    let tag = Example {
        input,
        target: tag_target,
    };
    let gen = (!masked.gold.is_empty()).then(|| {
        let mut input = vec![CLS_ID];
        input.extend(vocab.encode(&masked.tokens));
        Example {
            input,
            target: vocab.encode(&masked.gold),
        }
    });
    Ok((tag, gen))
}

/// Vocabulary over source tokens and inserted tokens of `records`.
pub fn build_vocab(records: &[TrainingRecord], max_size: usize) -> Vocab {
    let mut words: Vec<String> = Vec::new();
    for r in records {
        words.extend(tokenize(&r.source).into_inner());
        for slot in r.insertions.values() {
            words.extend(slot.iter().cloned());
        }
    }
    Vocab::build(words.iter().map(String::as_str).filter(|w| *w != CLS), max_size)
}

/// Encodes `records` per intent, in the order of `intents`. Returns the
/// datasets and skip counts.
pub fn build_task_data(
    records: &[TrainingRecord],
    intents: &[String],
    vocab: &Vocab,
    cfg: &EncoderConfig,
) -> (Vec<TaskData>, BTreeMap<SkipReason, usize>) {
    let tag_set = TagSet::new(cfg.tag_set);
    let mut data = vec![TaskData::default(); intents.len()];
    let mut skipped = BTreeMap::new();
    for rec in records {
        let Some(pos) = intents.iter().position(|i| *i == rec.intent) else {
            *skipped.entry(SkipReason::UnknownIntent).or_default() += 1;
            continue;
        };
        match encode_record(rec, vocab, &tag_set, cfg) {
            Ok((tag, gen)) => {
                data[pos].tag.push(tag);
                data[pos].gen.extend(gen);
            }
            Err(reason) => *skipped.entry(reason).or_default() += 1,
        }
    }
    (data, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edit_ops::{align, TagSetVariant};
    use crate::encoder::vocab::{MASK_ID, PAD_ID};
    use crate::ingest::SentencePair;

    fn record(s: &str, t: &str) -> TrainingRecord {
        let core = TagSet::new(TagSetVariant::Core14);
        let plan = align(&tokenize(s), &tokenize(t), &core);
        let pair = SentencePair {
            source: s.into(),
            target: t.into(),
            comment: String::new(),
            intent: Some("fluency".into()),
        };
        TrainingRecord::new(&pair, &plan)
    }

    #[test]
    fn encodes_tag_and_gen_targets() {
        let cfg = EncoderConfig::toy();
        let rec = record("that would retire", "that he would retire");
        let vocab = build_vocab(std::slice::from_ref(&rec), 100);
        let core = TagSet::new(TagSetVariant::Core14);
        let (tag, gen) = encode_record(&rec, &vocab, &core, &cfg).unwrap();
        assert_eq!(tag.input.len(), 4);
        assert_eq!(tag.input[0], CLS_ID);
        let append = core.index_of(&TagLabel::Append).unwrap() as u32;
        let keep = core.index_of(&TagLabel::Keep).unwrap() as u32;
        assert_eq!(tag.target, vec![keep, append, keep, keep]);
        let gen = gen.unwrap();
        assert_eq!(gen.input.iter().filter(|&&i| i == MASK_ID).count(), 4);
        assert_eq!(gen.target, vec![vocab.id("he"), PAD_ID, PAD_ID, PAD_ID]);
    }

    #[test]
    fn skips() {
        let cfg = EncoderConfig::toy();
        let rec = record("a", "a b c d e f g");
        let vocab = build_vocab(std::slice::from_ref(&rec), 100);
        let core = TagSet::new(TagSetVariant::Core14);
        assert_eq!(encode_record(&rec, &vocab, &core, &cfg), Err(SkipReason::InsertionTooLong));
        let kdra = TagSet::new(TagSetVariant::Kdra4);
        let rec = record("The cat", "the cat");
        assert_eq!(encode_record(&rec, &vocab, &kdra, &cfg), Err(SkipReason::TagOutsideSet));
        let (data, skipped) = build_task_data(&[rec], &["other".into()], &vocab, &cfg);
        assert!(data[0].tag.is_empty());
        assert_eq!(skipped[&SkipReason::UnknownIntent], 1);
    }
}

//! Two-pass prediction: tag every token, then fill insertion masks.

use super::config::{EncoderConfig, Mode};
use super::model::{forward, Batch};
use super::ops::argmax;
use super::params::ParamStore;
use super::vocab::{Vocab, CLS_ID};
use super::EncoderError;
use crate::edit_ops::{
    apply_plan, apply_transform, render_masked_input, tokenize, EditPlan, EditTag, TagLabel, TagSet, TokenSequence,
    Transform,
};

/// Anything that can apply one round of edits for an intent.
pub trait Editor {
    fn edit_once(&self, text: &str, intent: usize) -> Result<String, EncoderError>;
}

/// Applies `editor` up to `depth` times, stopping early at a fixed point.
/// Depth 0 returns the input unchanged.
pub fn edit_iterative<E: Editor + ?Sized>(editor: &E, text: &str, intent: usize, depth: usize) -> Result<String, EncoderError> {
    let mut cur = text.to_string();
    for _ in 0..depth {
        let next = editor.edit_once(&cur, intent)?;
        if next == cur {
            break;
        }
        cur = next;
    }
    Ok(cur)
}

/// A trained encoder with everything needed to edit raw text.
#[derive(Debug, Clone, PartialEq)]
pub struct EditModel {
    pub config: EncoderConfig,
    pub params: ParamStore,
    pub vocab: Vocab,
    /// Intent names by id.
    pub intents: Vec<String>,
}

impl EditModel {
    pub fn intent_id(&self, name: &str) -> Option<usize> {
        self.intents.iter().position(|i| i == name)
    }

    /// Edits one sentence. An all-KEEP prediction returns `text` verbatim.
    pub fn predict_edit(&self, text: &str, intent: usize) -> Result<String, EncoderError> {
        Ok(self.predict_batch(&[text], intent)?.remove(0))
    }

    /// Edits many sentences sharing an intent with two batched passes.
    pub fn predict_batch<S: AsRef<str>>(&self, texts: &[S], intent: usize) -> Result<Vec<String>, EncoderError> {
        let cfg = &self.config;
        if intent >= cfg.num_intents {
            return Err(EncoderError::UnknownIntent(intent));
        }
        let tag_set = TagSet::new(cfg.tag_set);
        let sources: Vec<TokenSequence> = texts.iter().map(|t| tokenize(t.as_ref())).collect();
        let tag_batch = Batch {
            intent,
            mode: Mode::Tag,
            inputs: sources.iter().map(|s| self.encode(s.tokens())).collect(),
            targets: vec![],
        };
        let tags = forward(cfg, &self.params, &tag_batch)?;
        let mut plans = Vec::with_capacity(sources.len());
        for (src, logits) in sources.iter().zip(&tags.logits) {
            let labels: Vec<TagLabel> = logits
                .chunks(tags.classes)
                .map(|row| tag_set.label(argmax(row)).expect("class id in range"))
                .collect();
            plans.push(sanitize(&labels, src));
        }

        let mut outputs = vec![String::new(); sources.len()];
        let mut gen_rows = Vec::new();
        let mut gen_inputs = Vec::new();
        for (i, (src, plan)) in sources.iter().zip(&plans).enumerate() {
            if plan.is_identity() {
                outputs[i] = texts[i].as_ref().to_string();
            } else if plan.insertions.is_empty() {
                outputs[i] = finish(src, plan);
            } else {
                let masked = render_masked_input(src, plan, cfg.n_masks)?;
                gen_rows.push(i);
                gen_inputs.push(self.encode(&masked.tokens));
            }
        }
        if !gen_rows.is_empty() {
            let gen = forward(
                cfg,
                &self.params,
                &Batch {
                    intent,
                    mode: Mode::Gen,
                    inputs: gen_inputs,
                    targets: vec![],
                },
            )?;
            for (k, &i) in gen_rows.iter().enumerate() {
                let words: Vec<Option<String>> = gen.logits[k]
                    .chunks(gen.classes)
                    .map(|row| {
                        let id = argmax(row) as u32;
                        (!Vocab::is_special(id)).then(|| self.vocab.token(id).to_string())
                    })
                    .collect();
                let plan = fill_slots(&plans[i], &sources[i], &words, cfg.n_masks);
                outputs[i] = finish(&sources[i], &plan);
            }
        }
        Ok(outputs)
    }

    fn encode(&self, tokens: &[String]) -> Vec<u32> {
        let mut ids = Vec::with_capacity(tokens.len() + 1);
        ids.push(CLS_ID);
        ids.extend(self.vocab.encode(tokens));
        ids
    }
}

impl Editor for EditModel {
    fn edit_once(&self, text: &str, intent: usize) -> Result<String, EncoderError> {
        self.predict_edit(text, intent)
    }
}

fn finish(src: &TokenSequence, plan: &EditPlan) -> String {
    apply_plan(src, plan)
        .expect("sanitized plans apply")
        .detokenize()
}

/// Turns raw classifier output into a valid plan with empty slots.
///
/// Positions whose label cannot apply fall back to KEEP: a non-KEEP label
/// at the sentence start other than APPEND, a transform that does not fire
/// on its token, and a merge on the final token. The token after a kept
/// merge is absorbed whatever its label.
pub(crate) fn sanitize(labels: &[TagLabel], src: &TokenSequence) -> EditPlan {
    let toks = src.tokens();
    let mut fixed = labels.to_vec();
    let mut absorbed = false;
    for pos in 0..fixed.len() {
        if absorbed {
            fixed[pos] = TagLabel::Keep;
            absorbed = false;
            continue;
        }
        if pos == 0 {
            if !matches!(fixed[0], TagLabel::Keep | TagLabel::Append) {
                fixed[0] = TagLabel::Keep;
            }
            continue;
        }
        if let TagLabel::Transform(t) = fixed[pos] {
            let next = toks.get(pos).map(String::as_str);
            let merge = matches!(t, Transform::MergeHyphen | Transform::MergeSpace);
            if apply_transform(t, &toks[pos - 1], next).is_err() {
                fixed[pos] = TagLabel::Keep;
            } else if merge {
                absorbed = true;
            }
        }
    }
    EditPlan::from_labels(&fixed, |_| Vec::new())
}

/// Fills each slot with its mask predictions (`None` entries dropped). An
/// empty verb slot keeps the original token.
fn fill_slots(plan: &EditPlan, src: &TokenSequence, words: &[Option<String>], n_masks: usize) -> EditPlan {
    let mut out = plan.clone();
    for (slot, chunk) in words.chunks(n_masks).enumerate() {
        let content: Vec<String> = chunk.iter().flatten().cloned().collect();
        out.insertions.insert(slot, content);
    }
    for (pos, tag) in plan.tags.iter().enumerate() {
        if let EditTag::TransformVerb { slot } = tag {
            if out.insertions[slot].is_empty() {
                out.insertions.insert(*slot, vec![src[pos - 1].clone()]);
            }
        }
    }
    out
}

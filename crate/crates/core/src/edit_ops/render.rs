//! Masked generator inputs.

use serde::{Deserialize, Serialize};

use super::plan::EditPlan;
use super::tags::EditTag;
use super::tokenize::TokenSequence;
use super::transform::apply_transform;
use super::EditOpsError;

pub const MASK: &str = "[MASK]";
pub const PAD: &str = "[PAD]";
pub const DELETE_OPEN: &str = "[DELETE]";
pub const DELETE_CLOSE: &str = "[/DELETE]";
pub const VERB_OPEN: &str = "[TRANSFORM_VERB]";
pub const VERB_CLOSE: &str = "[/TRANSFORM_VERB]";

/// Generator input: source with insertion sites expanded into masks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedInput {
    pub tokens: Vec<String>,
    /// One entry per `[MASK]`, left to right; `[PAD]` past the insertion.
    pub gold: Vec<String>,
}

impl MaskedInput {
    pub fn mask_positions(&self) -> Vec<usize> {
        self.tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| *t == MASK)
            .map(|(i, _)| i)
            .collect()
    }
}

fn push_masks(out: &mut Vec<String>, gold: &mut Vec<String>, slot: &[String], n_masks: usize) -> Result<(), EditOpsError> {
    if slot.len() > n_masks {
        return Err(EditOpsError::InsertionTooLong {
            len: slot.len(),
            n_masks,
        });
    }
    for k in 0..n_masks {
        out.push(MASK.to_string());
        gold.push(slot.get(k).cloned().unwrap_or_else(|| PAD.to_string()));
    }
    Ok(())
}

/// Renders the generator input for `plan`.
///
/// Each REPLACE / APPEND / TRANSFORM_VERB site receives `n_masks` masks.
/// APPEND masks follow the kept token; REPLACE and TRANSFORM_VERB masks
/// precede the original token, which is kept wrapped in
/// `[DELETE]..[/DELETE]` or `[TRANSFORM_VERB]..[/TRANSFORM_VERB]`. Deleted
/// tokens are wrapped one by one. Other transforms appear already applied.
pub fn render_masked_input(
    source: &TokenSequence,
    plan: &EditPlan,
    n_masks: usize,
) -> Result<MaskedInput, EditOpsError> {
    assert!(n_masks >= 1, "n_masks must be positive");
    plan.validate(source.len())?;
    let src = source.tokens();
    let mut tokens = Vec::with_capacity(src.len() + 8);
    let mut gold = Vec::new();
    let slot = |s: &usize| plan.insertions[s].as_slice();
    if let EditTag::Append { slot: s } = &plan.tags[0] {
        push_masks(&mut tokens, &mut gold, slot(s), n_masks)?;
    }
    for (i, tag) in plan.tags[1..].iter().enumerate() {
        let tok = &src[i];
        match tag {
            EditTag::Keep => tokens.push(tok.clone()),
            EditTag::Merged => {}
            EditTag::Delete => {
                tokens.extend([DELETE_OPEN.to_string(), tok.clone(), DELETE_CLOSE.to_string()]);
            }
            EditTag::Replace { slot: s } => {
                push_masks(&mut tokens, &mut gold, slot(s), n_masks)?;
                tokens.extend([DELETE_OPEN.to_string(), tok.clone(), DELETE_CLOSE.to_string()]);
            }
            EditTag::Append { slot: s } => {
                tokens.push(tok.clone());
                push_masks(&mut tokens, &mut gold, slot(s), n_masks)?;
            }
            EditTag::TransformVerb { slot: s } => {
                push_masks(&mut tokens, &mut gold, slot(s), n_masks)?;
                tokens.extend([VERB_OPEN.to_string(), tok.clone(), VERB_CLOSE.to_string()]);
            }
            EditTag::Transform(t) => {
                tokens.extend(apply_transform(*t, tok, src.get(i + 1).map(String::as_str))?);
            }
        }
    }
    Ok(MaskedInput { tokens, gold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edit_ops::tags::{TagSet, TagSetVariant};
    use crate::edit_ops::{align, tokenize};
    use std::collections::BTreeMap;

    #[test]
    fn all_keep_has_no_masks() {
        let s = tokenize("a b c");
        let m = render_masked_input(&s, &EditPlan::identity(3), 4).unwrap();
        assert_eq!(m.tokens, s.tokens());
        assert!(m.gold.is_empty());
    }

    #[test]
    fn append_pads_gold() {
        let core = TagSet::new(TagSetVariant::Core14);
        let s = tokenize("that would retire");
        let plan = align(&s, &tokenize("that he would retire"), &core);
        let m = render_masked_input(&s, &plan, 4).unwrap();
        assert_eq!(m.gold, vec!["he", PAD, PAD, PAD]);
        assert_eq!(
            m.tokens,
            vec!["that", MASK, MASK, MASK, MASK, "would", "retire"]
        );
        assert_eq!(m.mask_positions(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn delete_is_wrapped() {
        let s = tokenize("a great musician");
        let plan = EditPlan {
            tags: vec![EditTag::Keep, EditTag::Keep, EditTag::Delete, EditTag::Keep],
            insertions: BTreeMap::new(),
        };
        let m = render_masked_input(&s, &plan, 4).unwrap();
        assert_eq!(m.tokens, vec!["a", DELETE_OPEN, "great", DELETE_CLOSE, "musician"]);
        assert!(m.gold.is_empty());
    }

    #[test]
    fn verb_and_replace_sites() {
        let core = TagSet::new(TagSetVariant::Core14);
        let s = tokenize("farming are use big");
        let t = tokenize("farming uses large");
        let plan = align(&s, &t, &core);
        let m = render_masked_input(&s, &plan, 2).unwrap();
        assert!(m.tokens.contains(&VERB_OPEN.to_string()) || m.tokens.contains(&DELETE_OPEN.to_string()));
        assert_eq!(m.gold.len(), m.mask_positions().len());
    }

    #[test]
    fn too_long_insertion() {
        let core = TagSet::new(TagSetVariant::Core14);
        let s = tokenize("a");
        let plan = align(&s, &tokenize("a b c d e f g"), &core);
        assert!(matches!(
            render_masked_input(&s, &plan, 4),
            Err(EditOpsError::InsertionTooLong { len: 6, n_masks: 4 })
        ));
    }
}

use std::collections::BTreeMap;

use super::tags::{EditTag, TagLabel, TagSet, Transform};
use super::tokenize::TokenSequence;
use super::transform::apply_transform;
use super::EditOpsError;

/// Per-position tags (index 0 is the virtual sentence start) plus the
/// insertion slots referenced by slot-carrying tags.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EditPlan {
    pub tags: Vec<EditTag>,
    pub insertions: BTreeMap<usize, Vec<String>>,
}

impl EditPlan {
    /// All-KEEP plan for a source of `len` tokens.
    pub fn identity(len: usize) -> Self {
        Self {
            tags: vec![EditTag::Keep; len + 1],
            insertions: BTreeMap::new(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.tags.iter().map(EditTag::label).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.tags.iter().all(|t| *t == EditTag::Keep)
    }

    /// Cost in half units: KEEP 0, transform 1, every other operation 2 per
    /// token touched. Merged markers are free (paid by their MERGE tag).
    pub fn cost_half_units(&self) -> u32 {
        let mut cost = 0;
        for tag in &self.tags {
            cost += match tag {
                EditTag::Keep | EditTag::Merged => 0,
                EditTag::Transform(_) | EditTag::TransformVerb { .. } => 1,
                EditTag::Delete => 2,
                EditTag::Replace { slot } | EditTag::Append { slot } => {
                    2 * self.insertions.get(slot).map_or(0, |v| v.len() as u32)
                }
            };
        }
        cost
    }

    /// Rebuilds a plan from tag-vocabulary labels and per-slot insertions,
    /// the inverse of [`EditPlan::labels`]. A `KEEP` right after a merge is
    /// read as the merged token.
    pub fn from_labels(
        labels: &[TagLabel],
        mut slot_contents: impl FnMut(usize) -> Vec<String>,
    ) -> Self {
        let mut tags = Vec::with_capacity(labels.len());
        let mut insertions = BTreeMap::new();
        let mut next_slot = 0;
        for (pos, label) in labels.iter().enumerate() {
            let after_merge = matches!(
                tags.last(),
                Some(EditTag::Transform(Transform::MergeHyphen | Transform::MergeSpace))
            );
            let tag = if after_merge {
                EditTag::Merged
            } else {
                match *label {
                    TagLabel::Keep => EditTag::Keep,
                    TagLabel::Delete => EditTag::Delete,
                    TagLabel::Transform(t) => EditTag::Transform(t),
                    TagLabel::Replace | TagLabel::Append | TagLabel::TransformVerb => {
                        let slot = next_slot;
                        next_slot += 1;
                        insertions.insert(slot, slot_contents(pos));
                        match label {
                            TagLabel::Replace => EditTag::Replace { slot },
                            TagLabel::Append => EditTag::Append { slot },
                            _ => EditTag::TransformVerb { slot },
                        }
                    }
                }
            };
            tags.push(tag);
        }
        Self { tags, insertions }
    }

    /// Checks that every emitted label belongs to `tag_set`.
    pub fn within(&self, tag_set: &TagSet) -> bool {
        self.tags.iter().all(|t| tag_set.contains(&TagLabel::from(t)))
    }

    pub(crate) fn validate(&self, source_len: usize) -> Result<(), EditOpsError> {
        let shape = |msg: String| Err(EditOpsError::PlanShapeMismatch(msg));
        if self.tags.len() != source_len + 1 {
            return shape(format!(
                "plan has {} tags for {} source tokens",
                self.tags.len(),
                source_len
            ));
        }
        if !matches!(self.tags[0], EditTag::Keep | EditTag::Append { .. }) {
            return shape(format!("start position carries {}", self.tags[0]));
        }
        let mut seen = BTreeMap::new();
        for (pos, tag) in self.tags.iter().enumerate() {
            if let Some(slot) = tag.slot() {
                if !self.insertions.contains_key(&slot) {
                    return shape(format!("tag at {pos} references missing slot {slot}"));
                }
                if seen.insert(slot, pos).is_some() {
                    return shape(format!("slot {slot} referenced twice"));
                }
            }
            let merge = matches!(
                tag,
                EditTag::Transform(Transform::MergeHyphen | Transform::MergeSpace)
            );
            if merge && self.tags.get(pos + 1) != Some(&EditTag::Merged) {
                return shape(format!("merge at {pos} not followed by a merged marker"));
            }
            if *tag == EditTag::Merged
                && !matches!(
                    pos.checked_sub(1).and_then(|p| self.tags.get(p)),
                    Some(EditTag::Transform(Transform::MergeHyphen | Transform::MergeSpace))
                )
            {
                return shape(format!("merged marker at {pos} without a merge"));
            }
        }
        if seen.len() != self.insertions.len() {
            return shape("unreferenced insertion slot".into());
        }
        Ok(())
    }
}

/// Emits the edited sequence by applying each tag left to right.
pub fn apply_plan(source: &TokenSequence, plan: &EditPlan) -> Result<TokenSequence, EditOpsError> {
    plan.validate(source.len())?;
    let src = source.tokens();
    let mut out: Vec<String> = Vec::with_capacity(src.len() + 4);
    let slot = |s: &usize| plan.insertions[s].iter().cloned();
    if let EditTag::Append { slot: s } = &plan.tags[0] {
        out.extend(slot(s));
    }
    for (i, tag) in plan.tags[1..].iter().enumerate() {
        match tag {
            EditTag::Keep => out.push(src[i].clone()),
            EditTag::Delete | EditTag::Merged => {}
            EditTag::Replace { slot: s } | EditTag::TransformVerb { slot: s } => out.extend(slot(s)),
            EditTag::Append { slot: s } => {
                out.push(src[i].clone());
                out.extend(slot(s));
            }
            EditTag::Transform(t) => {
                let next = src.get(i + 1).map(String::as_str);
                out.extend(apply_transform(*t, &src[i], next)?);
            }
        }
    }
    Ok(TokenSequence::from_tokens(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edit_ops::tokenize;

    #[test]
    fn identity_plan_is_noop() {
        let s = tokenize("a b c");
        assert_eq!(apply_plan(&s, &EditPlan::identity(3)).unwrap(), s);
    }

    #[test]
    fn delete_all_and_prepend() {
        let s = tokenize("a b c");
        let mut plan = EditPlan {
            tags: vec![EditTag::Append { slot: 0 }, EditTag::Delete, EditTag::Delete, EditTag::Delete],
            insertions: BTreeMap::new(),
        };
        plan.insertions.insert(0, vec!["x".into()]);
        assert_eq!(apply_plan(&s, &plan).unwrap().tokens(), &["x"]);
    }

    #[test]
    fn shape_errors() {
        let s = tokenize("a b");
        assert!(matches!(
            apply_plan(&s, &EditPlan::identity(1)),
            Err(EditOpsError::PlanShapeMismatch(_))
        ));
        let bad_start = EditPlan {
            tags: vec![EditTag::Delete, EditTag::Keep, EditTag::Keep],
            insertions: BTreeMap::new(),
        };
        assert!(apply_plan(&s, &bad_start).is_err());
        let missing_slot = EditPlan {
            tags: vec![EditTag::Keep, EditTag::Replace { slot: 3 }, EditTag::Keep],
            insertions: BTreeMap::new(),
        };
        assert!(apply_plan(&s, &missing_slot).is_err());
        let dangling_merge = EditPlan {
            tags: vec![EditTag::Keep, EditTag::Keep, EditTag::Transform(Transform::MergeHyphen)],
            insertions: BTreeMap::new(),
        };
        assert!(apply_plan(&s, &dangling_merge).is_err());
    }

    #[test]
    fn inapplicable_transform_propagates() {
        let s = tokenize("cat");
        let plan = EditPlan {
            tags: vec![EditTag::Keep, EditTag::Transform(Transform::SplitHyphen)],
            insertions: BTreeMap::new(),
        };
        assert!(matches!(
            apply_plan(&s, &plan),
            Err(EditOpsError::InapplicableTransform { .. })
        ));
    }

    #[test]
    fn labels_round_trip_through_from_labels() {
        let s = tokenize("well known dog");
        let mut plan = EditPlan {
            tags: vec![
                EditTag::Keep,
                EditTag::Transform(Transform::MergeHyphen),
                EditTag::Merged,
                EditTag::Append { slot: 0 },
            ],
            insertions: BTreeMap::new(),
        };
        plan.insertions.insert(0, vec!["barks".into()]);
        let labels: Vec<TagLabel> = plan.labels().iter().map(|l| l.parse().unwrap()).collect();
        let rebuilt = EditPlan::from_labels(&labels, |_| vec!["barks".into()]);
        assert_eq!(rebuilt, plan);
        assert_eq!(
            apply_plan(&s, &plan).unwrap().tokens(),
            &["well-known", "dog", "barks"]
        );
    }
}

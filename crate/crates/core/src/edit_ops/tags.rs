//! Tag vocabularies and the per-token edit tag type.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EditOpsError;

/// Penn-style verb form labels used by the fine-grained verb tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VerbForm {
    Vb,
    Vbd,
    Vbg,
    Vbn,
    Vbz,
}

impl VerbForm {
    pub const ALL: [VerbForm; 5] = [
        VerbForm::Vb,
        VerbForm::Vbd,
        VerbForm::Vbg,
        VerbForm::Vbn,
        VerbForm::Vbz,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VerbForm::Vb => "VB",
            VerbForm::Vbd => "VBD",
            VerbForm::Vbg => "VBG",
            VerbForm::Vbn => "VBN",
            VerbForm::Vbz => "VBZ",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        VerbForm::ALL.into_iter().find(|f| f.as_str() == s)
    }
}

/// Deterministic token rewrites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transform {
    CaseCapital,
    CaseCapital1,
    CaseLower,
    CaseUpper,
    CaseUpperMinus1,
    AgreementPlural,
    AgreementSingular,
    SplitHyphen,
    MergeHyphen,
    MergeSpace,
    /// Fine-grained verb inflection change (source form, target form).
    Verb(VerbForm, VerbForm),
}

impl Transform {
    /// Detection priority: case, then number agreement, then hyphen
    /// split/merge, then verb forms.
    pub const PRIORITY: [Transform; 10] = [
        Transform::CaseCapital,
        Transform::CaseCapital1,
        Transform::CaseLower,
        Transform::CaseUpper,
        Transform::CaseUpperMinus1,
        Transform::AgreementPlural,
        Transform::AgreementSingular,
        Transform::SplitHyphen,
        Transform::MergeHyphen,
        Transform::MergeSpace,
    ];

    /// Number of source tokens consumed.
    pub fn source_span(self) -> usize {
        match self {
            Transform::MergeHyphen | Transform::MergeSpace => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> String {
        match self {
            Transform::CaseCapital => "TRANSFORM_CASE_CAPITAL".into(),
            Transform::CaseCapital1 => "TRANSFORM_CASE_CAPITAL_1".into(),
            Transform::CaseLower => "TRANSFORM_CASE_LOWER".into(),
            Transform::CaseUpper => "TRANSFORM_CASE_UPPER".into(),
            Transform::CaseUpperMinus1 => "TRANSFORM_CASE_UPPER_-1".into(),
            Transform::AgreementPlural => "TRANSFORM_AGREEMENT_PLURAL".into(),
            Transform::AgreementSingular => "TRANSFORM_AGREEMENT_SINGULAR".into(),
            Transform::SplitHyphen => "TRANSFORM_SPLIT_HYPHEN".into(),
            Transform::MergeHyphen => "MERGE_HYPHEN".into(),
            Transform::MergeSpace => "MERGE_SPACE".into(),
            Transform::Verb(a, b) => format!("TRANSFORM_VERB_{}_{}", a.as_str(), b.as_str()),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        if let Some(rest) = s.strip_prefix("TRANSFORM_VERB_") {
            let (a, b) = rest.split_once('_')?;
            return Some(Transform::Verb(VerbForm::parse(a)?, VerbForm::parse(b)?));
        }
        Transform::PRIORITY.into_iter().find(|t| t.name() == s)
    }
}

/// One label of an [`super::EditPlan`].
///
/// Slot-carrying tags hold the index of their insertion slot. `Merged` marks
/// the second token of a merge; its label in the tag vocabulary is `KEEP`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditTag {
    Keep,
    Delete,
    Replace { slot: usize },
    Append { slot: usize },
    Transform(Transform),
    /// Verb form change whose corrected form is carried by an insertion slot.
    TransformVerb { slot: usize },
    Merged,
}

impl EditTag {
    pub fn slot(&self) -> Option<usize> {
        match *self {
            EditTag::Replace { slot } | EditTag::Append { slot } | EditTag::TransformVerb { slot } => {
                Some(slot)
            }
            _ => None,
        }
    }

    /// The tag-vocabulary label for this tag.
    pub fn label(&self) -> String {
        match self {
            EditTag::Keep | EditTag::Merged => "KEEP".into(),
            EditTag::Delete => "DELETE".into(),
            EditTag::Replace { .. } => "REPLACE".into(),
            EditTag::Append { .. } => "APPEND".into(),
            EditTag::Transform(t) => t.name(),
            EditTag::TransformVerb { .. } => "TRANSFORM_VERB".into(),
        }
    }
}

impl fmt::Display for EditTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A label without slot payload, used for classifier outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TagLabel {
    Keep,
    Delete,
    Replace,
    Append,
    Transform(Transform),
    TransformVerb,
}

impl TagLabel {
    pub fn name(&self) -> String {
        match self {
            TagLabel::Keep => "KEEP".into(),
            TagLabel::Delete => "DELETE".into(),
            TagLabel::Replace => "REPLACE".into(),
            TagLabel::Append => "APPEND".into(),
            TagLabel::Transform(t) => t.name(),
            TagLabel::TransformVerb => "TRANSFORM_VERB".into(),
        }
    }

    pub fn takes_slot(&self) -> bool {
        matches!(self, TagLabel::Replace | TagLabel::Append | TagLabel::TransformVerb)
    }
}

impl FromStr for TagLabel {
    type Err = EditOpsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "KEEP" => TagLabel::Keep,
            "DELETE" => TagLabel::Delete,
            "REPLACE" => TagLabel::Replace,
            "APPEND" => TagLabel::Append,
            "TRANSFORM_VERB" => TagLabel::TransformVerb,
            other => TagLabel::Transform(
                Transform::parse(other).ok_or_else(|| EditOpsError::UnknownTag(other.to_string()))?,
            ),
        })
    }
}

impl From<&EditTag> for TagLabel {
    fn from(tag: &EditTag) -> Self {
        match *tag {
            EditTag::Keep | EditTag::Merged => TagLabel::Keep,
            EditTag::Delete => TagLabel::Delete,
            EditTag::Replace { .. } => TagLabel::Replace,
            EditTag::Append { .. } => TagLabel::Append,
            EditTag::Transform(t) => TagLabel::Transform(t),
            EditTag::TransformVerb { .. } => TagLabel::TransformVerb,
        }
    }
}

/// The three tag designs compared for the tagging head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum TagSetVariant {
    #[serde(rename = "kdra4")]
    Kdra4,
    #[default]
    #[serde(rename = "core14")]
    Core14,
    #[serde(rename = "extended34")]
    Extended34,
}

impl FromStr for TagSetVariant {
    type Err = EditOpsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "kdra4" | "kdra" | "4" => Ok(TagSetVariant::Kdra4),
            "core14" | "14" => Ok(TagSetVariant::Core14),
            "extended34" | "34" => Ok(TagSetVariant::Extended34),
            _ => Err(EditOpsError::UnknownTag(s.to_string())),
        }
    }
}

const KDRA4: [&str; 4] = ["KEEP", "DELETE", "REPLACE", "APPEND"];

const CORE14: [&str; 14] = [
    "APPEND",
    "DELETE",
    "KEEP",
    "MERGE_HYPHEN",
    "REPLACE",
    "TRANSFORM_AGREEMENT_PLURAL",
    "TRANSFORM_AGREEMENT_SINGULAR",
    "TRANSFORM_CASE_CAPITAL",
    "TRANSFORM_CASE_CAPITAL_1",
    "TRANSFORM_CASE_LOWER",
    "TRANSFORM_CASE_UPPER",
    "TRANSFORM_CASE_UPPER_-1",
    "TRANSFORM_SPLIT_HYPHEN",
    "TRANSFORM_VERB",
];

const EXTENDED34: [&str; 34] = [
    "APPEND",
    "DELETE",
    "KEEP",
    "MERGE_HYPHEN",
    "MERGE_SPACE",
    "REPLACE",
    "TRANSFORM_AGREEMENT_PLURAL",
    "TRANSFORM_AGREEMENT_SINGULAR",
    "TRANSFORM_CASE_CAPITAL",
    "TRANSFORM_CASE_CAPITAL_1",
    "TRANSFORM_CASE_LOWER",
    "TRANSFORM_CASE_UPPER",
    "TRANSFORM_CASE_UPPER_-1",
    "TRANSFORM_SPLIT_HYPHEN",
    "TRANSFORM_VERB_VBD_VB",
    "TRANSFORM_VERB_VBD_VBG",
    "TRANSFORM_VERB_VBD_VBN",
    "TRANSFORM_VERB_VBD_VBZ",
    "TRANSFORM_VERB_VBG_VB",
    "TRANSFORM_VERB_VBG_VBD",
    "TRANSFORM_VERB_VBG_VBN",
    "TRANSFORM_VERB_VBG_VBZ",
    "TRANSFORM_VERB_VBN_VB",
    "TRANSFORM_VERB_VBN_VBD",
    "TRANSFORM_VERB_VBN_VBG",
    "TRANSFORM_VERB_VBN_VBZ",
    "TRANSFORM_VERB_VBZ_VB",
    "TRANSFORM_VERB_VBZ_VBD",
    "TRANSFORM_VERB_VBZ_VBG",
    "TRANSFORM_VERB_VBZ_VBN",
    "TRANSFORM_VERB_VB_VBD",
    "TRANSFORM_VERB_VB_VBG",
    "TRANSFORM_VERB_VB_VBN",
    "TRANSFORM_VERB_VB_VBZ",
];

/// An ordered tag vocabulary. Class ids follow the listing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSet {
    variant: TagSetVariant,
    tags: Vec<TagLabel>,
}

impl TagSet {
    pub fn new(variant: TagSetVariant) -> Self {
        let names: &[&str] = match variant {
            TagSetVariant::Kdra4 => &KDRA4,
            TagSetVariant::Core14 => &CORE14,
            TagSetVariant::Extended34 => &EXTENDED34,
        };
        let tags = names
            .iter()
            .map(|n| n.parse().expect("built-in tag names parse"))
            .collect();
        Self { variant, tags }
    }

    pub fn variant(&self) -> TagSetVariant {
        self.variant
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn labels(&self) -> &[TagLabel] {
        &self.tags
    }

    pub fn names(&self) -> Vec<String> {
        self.tags.iter().map(TagLabel::name).collect()
    }

    pub fn index_of(&self, label: &TagLabel) -> Option<usize> {
        self.tags.iter().position(|t| t == label)
    }

    pub fn label(&self, id: usize) -> Option<TagLabel> {
        self.tags.get(id).copied()
    }

    pub fn contains(&self, label: &TagLabel) -> bool {
        self.index_of(label).is_some()
    }

    pub fn allows_transform(&self, t: Transform) -> bool {
        self.contains(&TagLabel::Transform(t))
    }

    /// Coarse verb tag: the corrected form rides in an insertion slot.
    pub fn has_coarse_verb(&self) -> bool {
        self.contains(&TagLabel::TransformVerb)
    }

    /// Transforms available to the aligner, in detection priority order.
    pub fn transforms(&self) -> Vec<Transform> {
        let mut out: Vec<Transform> = Transform::PRIORITY
            .into_iter()
            .filter(|t| self.allows_transform(*t))
            .collect();
        for a in VerbForm::ALL {
            for b in VerbForm::ALL {
                let t = Transform::Verb(a, b);
                if a != b && self.allows_transform(t) {
                    out.push(t);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn sizes_match_designs() {
        assert_eq!(TagSet::new(TagSetVariant::Kdra4).len(), 4);
        assert_eq!(TagSet::new(TagSetVariant::Core14).len(), 14);
        assert_eq!(TagSet::new(TagSetVariant::Extended34).len(), 34);
    }

    #[test]
    fn names_unique_and_round_trip() {
        for v in [TagSetVariant::Kdra4, TagSetVariant::Core14, TagSetVariant::Extended34] {
            let set = TagSet::new(v);
            let names = set.names();
            let uniq: HashSet<_> = names.iter().collect();
            assert_eq!(uniq.len(), names.len());
            for (i, n) in names.iter().enumerate() {
                let label: TagLabel = n.parse().unwrap();
                assert_eq!(set.index_of(&label), Some(i));
            }
        }
    }

    #[test]
    fn stable_ids() {
        let set = TagSet::new(TagSetVariant::Core14);
        assert_eq!(set.index_of(&TagLabel::Append), Some(0));
        assert_eq!(set.index_of(&TagLabel::Keep), Some(2));
        assert_eq!(set.index_of(&TagLabel::TransformVerb), Some(13));
        let kdra = TagSet::new(TagSetVariant::Kdra4);
        assert_eq!(kdra.index_of(&TagLabel::Keep), Some(0));
        assert!(kdra.transforms().is_empty());
    }

    #[test]
    fn extended_has_twenty_verb_pairs() {
        let set = TagSet::new(TagSetVariant::Extended34);
        let verbs = set
            .transforms()
            .into_iter()
            .filter(|t| matches!(t, Transform::Verb(..)))
            .count();
        assert_eq!(verbs, 20);
        assert!(!set.has_coarse_verb());
        assert!(set.allows_transform(Transform::MergeSpace));
        assert!(!TagSet::new(TagSetVariant::Core14).allows_transform(Transform::MergeSpace));
    }
}

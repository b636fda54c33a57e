//! Edit operations: tokenization, tag vocabularies, DP alignment of sentence
//! pairs into edit plans, plan application and masked-input rendering.

mod align;
mod examples;
mod plan;
mod render;
mod tags;
mod tokenize;
mod transform;
pub mod verbs;

pub use align::{align, alignment_cost};
pub use examples::{plan_to_examples, GenerationExample, TaggingExample, TrainingRecord};
pub use plan::{apply_plan, EditPlan};
pub use render::{
    render_masked_input, MaskedInput, DELETE_CLOSE, DELETE_OPEN, MASK, PAD, VERB_CLOSE, VERB_OPEN,
};
pub use tags::{EditTag, TagLabel, TagSet, TagSetVariant, Transform, VerbForm};
pub use tokenize::{tokenize, TokenSequence};
pub use transform::{apply_transform, detect_transform, transform_matches, TransformMatch};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EditOpsError {
    #[error("transform {tag} cannot be applied to {token:?}")]
    InapplicableTransform { tag: String, token: String },
    #[error("plan shape mismatch: {0}")]
    PlanShapeMismatch(String),
    #[error("insertion of {len} tokens exceeds the mask budget of {n_masks}")]
    InsertionTooLong { len: usize, n_masks: usize },
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
}

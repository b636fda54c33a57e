//! Transformer encoder with a tagging head and a mask-infilling head,
//! optionally sparse: feed-forward blocks (or the whole last layer) are
//! replicated per intent and mode and selected by a router.
//!
//! Everything runs in f64 with hand-written backward passes.

mod checkpoint;
mod config;
mod data;
pub mod gradcheck;
mod infer;
mod model;
mod ops;
mod optim;
mod params;
mod train;
pub mod vocab;

pub use checkpoint::{load_checkpoint, read_checkpoint, round_to_f32, save_checkpoint, write_checkpoint, FORMAT_VERSION};
pub use config::{EncoderConfig, Granularity, Mode, RouterKind, SparsityMode};
pub use data::{build_task_data, build_vocab, encode_record, SkipReason};
pub use infer::{edit_iterative, EditModel, Editor};
pub use model::{batch_loss, forward, loss_and_grads, route, Batch, ForwardOutput, Grads, RoutingDecision};
pub use optim::{adam_update, clip_grad_norm, AdamConfig, AdamState, Moments};
pub use params::{clone_expert, freeze_for_finetune, ParamStore, Tensor, TrainableMask};
pub use train::{
    schedule_next, train, train_step, BatchSampler, Example, StepOptions, StepReport, TaskData, TrainOptions,
    TrainState, TrainSummary,
};
pub use vocab::Vocab;

use crate::edit_ops::EditOpsError;

#[derive(Debug, thiserror::Error)]
pub enum EncoderError {
    #[error("invalid encoder config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient at {0}")]
    NonFiniteGradient(String),
    #[error("unknown intent id {0}")]
    UnknownIntent(usize),
    #[error("model has no experts")]
    NoExperts,
    #[error("missing parameter {0}")]
    MissingParameter(String),
    #[error("batch for {found:?} but the schedule expects {expected:?}")]
    ScheduleMismatch { expected: (usize, Mode), found: (usize, Mode) },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    EditOps(#[from] EditOpsError),
}

impl From<std::io::Error> for EncoderError {
    fn from(e: std::io::Error) -> Self {
        EncoderError::Io(e.to_string())
    }
}

/// Whether a parameter belongs to an expert.
pub fn is_expert_param(name: &str) -> bool {
    params::is_expert_param(name)
}

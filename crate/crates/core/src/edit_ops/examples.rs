//! Conversion of sentence pairs into tagging / generation training targets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::align::align;
use super::plan::EditPlan;
use super::render::{render_masked_input, MaskedInput};
use super::tags::{TagLabel, TagSet};
use super::tokenize::{tokenize, TokenSequence};
use super::EditOpsError;
use crate::ingest::SentencePair;

/// Tagging target: source tokens and one label per plan position
/// (position 0 is the sentence start).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggingExample {
    pub tokens: Vec<String>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationExample {
    pub masked: MaskedInput,
}

/// One line of the training-example JSONL file. Field order is part of the
/// format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub source: String,
    pub target: String,
    pub intent: String,
    pub tags: Vec<String>,
    pub insertions: BTreeMap<String, Vec<String>>,
}

impl TrainingRecord {
    pub fn new(pair: &SentencePair, plan: &EditPlan) -> Self {
        Self {
            source: pair.source.clone(),
            target: pair.target.clone(),
            intent: pair.intent.clone().unwrap_or_default(),
            tags: plan.labels(),
            insertions: plan
                .insertions
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
        }
    }

    /// Rebuilds the plan recorded in this line.
    pub fn plan(&self) -> Result<EditPlan, EditOpsError> {
        let labels = self
            .tags
            .iter()
            .map(|t| t.parse::<TagLabel>())
            .collect::<Result<Vec<_>, _>>()?;
        let mut slots = self.insertions.values().cloned();
        Ok(EditPlan::from_labels(&labels, |_| slots.next().unwrap_or_default()))
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Aligns a pair and renders both training targets.
///
/// Returns `None` when any single insertion exceeds `n_masks` tokens.
pub fn plan_to_examples(
    pair: &SentencePair,
    tag_set: &TagSet,
    n_masks: usize,
) -> Option<(TaggingExample, GenerationExample)> {
    let source = tokenize(&pair.source);
    let target = tokenize(&pair.target);
    let plan = align(&source, &target, tag_set);
    examples_from_plan(&source, &plan, n_masks)
}

pub(crate) fn examples_from_plan(
    source: &TokenSequence,
    plan: &EditPlan,
    n_masks: usize,
) -> Option<(TaggingExample, GenerationExample)> {
    let masked = render_masked_input(source, plan, n_masks).ok()?;
    Some((
        TaggingExample {
            tokens: source.tokens().to_vec(),
            labels: plan.labels(),
        },
        GenerationExample { masked },
    ))
}

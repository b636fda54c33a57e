//! Run configuration file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sparsedit::edit_ops::TagSetVariant;
use sparsedit::encoder::EncoderConfig;
use sparsedit::ingest::FilterConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Single source of randomness; overrides the encoder seed.
    pub seed: u64,
    pub ingest: IngestSection,
    pub cluster: ClusterSection,
    pub annotate: AnnotateSection,
    pub train: TrainSection,
    pub eval: EvalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            ingest: IngestSection::default(),
            cluster: ClusterSection::default(),
            annotate: AnnotateSection::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub dumps: Vec<PathBuf>,
    pub filter: FilterConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub k: usize,
    pub svd_dim: usize,
    pub center: bool,
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Width of the hashed bag-of-words embedder used without an external
    /// embedding file.
    pub embedder_dim: usize,
    /// Fail when an intent gets no cluster instead of reporting it.
    pub strict_labels: bool,
}

impl Default for ClusterSection {
    fn default() -> Self {
        Self {
            k: 10,
            svd_dim: 100,
            center: true,
            n_init: 10,
            max_iter: 300,
            tol: 1e-6,
            embedder_dim: 256,
            strict_labels: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotateSection {
    pub tag_set: TagSetVariant,
    pub n_masks: usize,
}

impl Default for AnnotateSection {
    fn default() -> Self {
        Self {
            tag_set: TagSetVariant::Core14,
            n_masks: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// `vocab_size`, `num_intents`, `tag_set`, `n_masks` and `seed` are
    /// derived from the data and the other sections.
    pub encoder: EncoderConfig,
    pub steps: u64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub clip: f64,
    pub max_vocab: usize,
    pub time_limit_secs: Option<f64>,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::default(),
            steps: 2000,
            batch_size: 32,
            learning_rate: 1e-3,
            clip: 1.0,
            max_vocab: 8000,
            time_limit_secs: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Named instance files scored together by `eval` without `--in`.
    pub datasets: BTreeMap<String, PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_unknown_keys() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.cluster.k, 10);
        assert_eq!(c.cluster.svd_dim, 100);
        assert_eq!(c.train.encoder.lambda, 1.0);
        assert!(serde_json::from_str::<RunConfig>(r#"{"cluster": {"kk": 3}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 3}"#).is_err());
        let c: RunConfig = serde_json::from_str(r#"{"annotate": {"tag_set": "kdra4"}}"#).unwrap();
        assert_eq!(c.annotate.tag_set, TagSetVariant::Kdra4);
    }
}

use serde::{Deserialize, Serialize};

use super::EncoderError;
use crate::edit_ops::{TagSet, TagSetVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Tag,
    Gen,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::Tag, Mode::Gen];

    pub fn index(self) -> usize {
        match self {
            Mode::Tag => 0,
            Mode::Gen => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Tag => "tag",
            Mode::Gen => "gen",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SparsityMode {
    Dense,
    SparseFFN,
    SparseLastLayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouterKind {
    TaskId,
    Linear,
    TaskIdLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Granularity {
    Sequence,
    Token,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub num_heads: usize,
    pub ffn_dim: usize,
    pub vocab_size: usize,
    pub max_seq_len: usize,
    /// Number of intents `n`.
    pub num_intents: usize,
    pub tag_set: TagSetVariant,
    pub sparsity_mode: SparsityMode,
    pub router: RouterKind,
    pub routing_granularity: Granularity,
    /// One expert per intent serving both modes instead of one per mode.
    pub share_tag_gen: bool,
    /// Weight of generation batches.
    pub lambda: f64,
    pub n_masks: usize,
    pub softmax_temperature: f64,
    pub init_std: f64,
    pub router_init_std: f64,
    pub layer_norm_eps: f64,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            num_layers: 4,
            hidden_dim: 128,
            num_heads: 4,
            ffn_dim: 512,
            vocab_size: 8000,
            max_seq_len: 128,
            num_intents: 4,
            tag_set: TagSetVariant::Core14,
            sparsity_mode: SparsityMode::SparseFFN,
            router: RouterKind::TaskId,
            routing_granularity: Granularity::Sequence,
            share_tag_gen: false,
            lambda: 1.0,
            n_masks: 4,
            softmax_temperature: 0.7,
            init_std: 0.02,
            router_init_std: 0.001,
            layer_norm_eps: 1e-5,
            seed: 42,
        }
    }
}

impl EncoderConfig {
    /// The toy configuration used for gradient checks: 2 layers, hidden 8.
    pub fn toy() -> Self {
        Self {
            num_layers: 2,
            hidden_dim: 8,
            num_heads: 2,
            ffn_dim: 16,
            vocab_size: 24,
            max_seq_len: 16,
            num_intents: 2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EncoderError> {
        let bad = |m: &str| Err(EncoderError::InvalidConfig(m.to_string()));
        if self.num_layers == 0 || self.hidden_dim == 0 || self.ffn_dim == 0 || self.max_seq_len == 0 {
            return bad("sizes must be positive");
        }
        if self.num_heads == 0 || !self.hidden_dim.is_multiple_of(self.num_heads) {
            return bad("hidden_dim must be divisible by num_heads");
        }
        if self.num_intents == 0 {
            return bad("num_intents must be at least 1");
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return bad("lambda must be a finite non-negative number");
        }
        if self.n_masks == 0 {
            return bad("n_masks must be positive");
        }
        if self.softmax_temperature.is_nan() || self.softmax_temperature <= 0.0 {
            return bad("softmax_temperature must be positive");
        }
        if self.vocab_size < super::vocab::SPECIALS.len() {
            return bad("vocab_size smaller than the special tokens");
        }
        Ok(())
    }

    pub fn num_tags(&self) -> usize {
        TagSet::new(self.tag_set).len()
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.num_heads
    }

    pub fn is_sparse(&self) -> bool {
        self.sparsity_mode != SparsityMode::Dense
    }

    /// Experts per sparse slot: `2n`, or `n` when tag and gen share.
    pub fn experts_per_slot(&self) -> usize {
        if self.share_tag_gen {
            self.num_intents
        } else {
            2 * self.num_intents
        }
    }

    /// Layout index of the expert for intent `r` in mode `z`: `z·n + r`
    /// (just `r` when tag and gen share experts).
    pub fn expert_index(&self, r: usize, z: Mode) -> usize {
        if self.share_tag_gen {
            r
        } else {
            z.index() * self.num_intents + r
        }
    }

    /// Layers whose computation is routed to experts.
    pub fn sparse_layers(&self) -> Vec<usize> {
        match self.sparsity_mode {
            SparsityMode::Dense => vec![],
            SparsityMode::SparseFFN => (0..self.num_layers).collect(),
            SparsityMode::SparseLastLayer => vec![self.num_layers - 1],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_arithmetic() {
        let c = EncoderConfig::default();
        assert_eq!(c.expert_index(2, Mode::Gen), 6);
        assert_eq!(c.expert_index(3, Mode::Tag), 3);
        assert_eq!(c.experts_per_slot(), 8);
        let shared = EncoderConfig {
            share_tag_gen: true,
            ..c
        };
        assert_eq!(shared.experts_per_slot(), 4);
        assert_eq!(shared.expert_index(2, Mode::Gen), 2);
    }

    #[test]
    fn validation() {
        assert!(EncoderConfig::default().validate().is_ok());
        let c = EncoderConfig {
            num_heads: 3,
            ..EncoderConfig::default()
        };
        assert!(c.validate().is_err());
        let c = EncoderConfig {
            lambda: -1.0,
            ..EncoderConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_rejects_unknown_keys() {
        assert!(serde_json::from_str::<EncoderConfig>(r#"{"hiden_dim": 3}"#).is_err());
        let c: EncoderConfig = serde_json::from_str(r#"{"hidden_dim": 64, "router": "Linear"}"#).unwrap();
        assert_eq!(c.hidden_dim, 64);
        assert_eq!(c.router, RouterKind::Linear);
    }
}

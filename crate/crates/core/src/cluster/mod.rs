//! Grouping revision comments into editing intents.
//!
//! Comment embeddings are reduced with a truncated SVD, clustered with
//! k-means++ initialised Lloyd iterations, and clusters are named by the
//! nearest seed prompts of each intent. Labeled clusters become per-intent
//! training corpora.

mod embed;
mod export;
mod kmeans;
mod label;
mod linalg;
mod svd;

pub use embed::{load_embeddings, parse_embeddings, EmbeddingMatrix, HashedBowEmbedder};
pub use export::{cluster_report, export_corpus, partition_corpus, ClusterSummary, ExportCounts};
pub use kmeans::{assign, kmeans_fit, kmeans_pp_init, kmeans_run, restart_seeds, ClusterModel, KMeansConfig};
pub use label::{
    default_seed_prompts, label_clusters, label_clusters_lenient, IntentLabel, Labeling, SeedPrompts, INTENTS,
};
pub use linalg::{jacobi_eigen, Matrix};
pub use svd::{truncated_svd, Svd};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ClusterError {
    #[error("row {row}: expected {expected} values, found {found}")]
    DimMismatch { row: usize, expected: usize, found: usize },
    #[error("row {0} contains a non-finite value")]
    NonFiniteValue(usize),
    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("no cluster holds a majority of the prompts for intent {0:?}")]
    UnlabeledIntent(String),
    #[error("rank {r} outside 1..={max}")]
    InvalidRank { r: usize, max: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ClusterError {
    fn from(e: std::io::Error) -> Self {
        ClusterError::Io(e.to_string())
    }
}

//! Text editing with per-token edit tags and a sparse-expert encoder.
//!
//! The crate covers the whole pipeline: mining revision pairs from wiki
//! dumps ([`ingest`]), grouping edit comments into intents ([`cluster`]),
//! turning sentence pairs into tag/infill targets ([`edit_ops`]), training
//! the encoder ([`encoder`]) and scoring its output ([`metrics`]).

#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod cluster;
pub mod edit_ops;
pub mod encoder;
pub mod ingest;
pub mod metrics;
pub mod synthetic;

//! Attention-based neural machine translation with candidate vocabularies
//! learned from the attention layer.
//!
//! The pipeline: tokenize a parallel corpus ([`tokenizer`]), train an
//! attention encoder-decoder ([`model`], [`trainer`]) while accumulating
//! attention weights into a sparse source-to-target count matrix
//! ([`accumulator`]), turn the matrix into per-source-token candidate lists,
//! and decode with the output softmax restricted to those candidates
//! ([`decoder`]). [`model1`] provides an EM word aligner used as an external
//! candidate baseline and as an UNK-replacement dictionary; [`metrics`]
//! scores translations with BLEU.

pub mod accumulator;
pub mod decoder;
mod error;
pub mod metrics;
pub mod model;
pub mod model1;
pub mod synth;
pub mod tokenizer;
pub mod trainer;

pub use error::{CoreError, Result};

/// Scalar type for all model arithmetic. Training math defaults to double
/// precision; the `single-precision` feature switches benchmarks to f32.
#[cfg(not(feature = "single-precision"))]
pub type Real = f64;
#[cfg(feature = "single-precision")]
pub type Real = f32;

pub use accumulator::{AccumulatorConfig, CandidateTable, SparseAlignmentMatrix};
pub use model1::LexicalTable;
pub use trainer::{Batch, ParallelCorpus, TrainConfig, TrainMode};
pub use model::{ActiveSet, DecoderStepOutput, EncoderStates, ModelDims, ModelParams};
pub use tokenizer::{BpeModel, Vocabulary, BOS_ID, EOS_ID, PAD_ID, UNK_ID};

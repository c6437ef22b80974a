//! Sparse attention patterns and the masked Transformer encoder.
//!
//! Patterns (local window, global positions, AST adjacency, dilated window,
//! random) are built as [`AttentionMask`]s and combined by [`union`]. The
//! encoder can evaluate attention in two ways that agree to rounding: a
//! gather kernel that only touches allowed pairs, and a dense reference
//! that computes every score and drops disallowed ones from the softmax.

mod config;
mod mask;
mod transformer;

pub use config::{AttentionPath, ModelConfig};
pub use mask::{
    ast_mask, dilated_mask, global_mask, local_mask, local_mask_strict, random_mask, union, AttentionMask, MaskPlan,
    Pattern, PatternSet,
};
pub use transformer::{
    classify, encoder_layer, encoder_stack, masked_attention, multi_head, positional_encoding, positional_rows,
    AttentionOutput, HeadParams, LayerParams, ModelParams, StackOutput,
};

use thiserror::Error;

use crate::tensor::TensorError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error("global index {index} out of range for sequence length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("adjacency matrix is not symmetric")]
    NotSymmetric,
    #[error("mask length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("union of zero masks")]
    EmptyUnion,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttentionError {
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("positional encoding needs an even model width, got {0}")]
    OddDimension(usize),
    #[error("cannot pool over zero valid rows")]
    ZeroLength,
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
}

//! Dense 2-D tensors and a tape-based autodiff graph.
//!
//! Everything is `f64`, row-major. The primitive set is exactly what the
//! classifier needs: matrix products, bias broadcasting over rows,
//! elementwise `tanh`/ReLU/products, column concatenation, row gather and
//! slice, segment max pooling, layer norm, masked row softmax, the
//! child-sum tree recursion, a pattern-restricted attention kernel and a
//! fused softmax cross-entropy.

mod dense;
mod graph;
mod params;

pub use dense::Tensor;
pub use graph::{DenseMask, Gradients, Graph, SparsePattern, Var};
pub use params::{Param, ParamId, ParamStore};

use thiserror::Error;

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TensorError {
    #[error("{op}: shape mismatch, expected {expected:?}, got {got:?}")]
    ShapeMismatch { op: &'static str, expected: Vec<usize>, got: Vec<usize> },
    #[error("{op}: reduction over zero rows")]
    EmptyReduction { op: &'static str },
    #[error("backward needs a scalar loss, got shape {shape:?}")]
    NotScalar { shape: Vec<usize> },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
}

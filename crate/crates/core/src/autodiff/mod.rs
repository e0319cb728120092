//! Minimal reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! The op set is deliberately small: affine layers, ReLU, sigmoid,
//! elementwise products (with single-row broadcasting for masks), sums,
//! concatenation, mean squared error and softmax cross-entropy. That covers
//! the perceptrons trained by the solver and nothing else.

mod check;
mod graph;
mod tensor;

pub use check::{central_difference, finite_difference_check, relative_error};
pub(crate) use graph::sigmoid;
pub use graph::{Gradients, Graph, NodeId};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("shape mismatch at {node}: {detail}")]
    ShapeMismatch { node: String, detail: String },
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
    #[error("expected {expected} input tensors, got {found}")]
    InputCount { expected: usize, found: usize },
    #[error("backward called before forward")]
    NotForwarded,
    #[error("backward requires a scalar output, {node} has shape {shape:?}")]
    NonScalarOutput { node: String, shape: Vec<usize> },
    #[error("non-finite value produced at {0}")]
    NonFinite(String),
    #[error("{0} is not a parameter")]
    NotAParameter(String),
    #[error("unknown node index {0}")]
    UnknownNode(usize),
    #[error("graph has no nodes")]
    EmptyGraph,
}

#[cfg(test)]
mod tests;

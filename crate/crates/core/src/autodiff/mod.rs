//! Minimal reverse-mode automatic differentiation over [`Scalar`](crate::Scalar) tensors.

mod adam;
mod graph;
mod init;
mod params;
mod sample;
mod tensor;

pub use adam::AdamState;
pub use graph::{log_softmax_row, Gradients, Graph, Var};
pub use init::scaled_uniform;
pub use params::{ParamId, ParamStore};
pub use sample::{argmax, categorical_sample, log_softmax, softmax};
pub use tensor::Tensor;

//! Minimal dense layer library with exact analytic gradients.
//!
//! Everything is 64-bit floats on flat row-major buffers, sized for
//! desk-scale sequence models. There is no general autodiff: each layer
//! exposes an explicit forward (returning a cache) and backward (consuming
//! it), and every gradient is verified against central finite differences in
//! the test suite.

mod adam;
mod charcnn;
mod gradcheck;
mod gru;
mod layers;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use charcnn::{char_cnn, char_cnn_backward, CharCnnCache, CharCnnParams};
pub use gradcheck::{finite_diff_grad, max_rel_err, relative_error};
pub use gru::{
    bigru, bigru_backward, gru_cell, gru_cell_backward, BiGruCache, GruCache, GruParams,
};
pub use layers::{
    derive_rng, dropout, dropout_backward, l2_grad_accumulate, l2_penalty, linear, linear_backward,
    LinearParams,
};
pub use tensor::{Parameter, Tensor};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty sequence")]
    EmptySequence,
    #[error("non-finite value in `{0}`")]
    NonFinite(String),
}

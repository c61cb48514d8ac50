//! Minimal feed-forward function approximation with analytic gradients.
//!
//! Everything the trainer's parameter updates need lives here: dense nets
//! with an optional LayerNorm toggle, orthogonal initialization, an
//! adaptive-moment optimizer, global gradient clipping, running value
//! normalization, and a versioned checkpoint format.
//!
//! Nets store their parameters in one flat `Vec<f64>` (weights row-major,
//! then biases, per layer) so the optimizer, clipping, checkpointing and
//! finite-difference checks all operate on a single slice.

mod adam;
mod checkpoint;
mod init;
mod net;
mod norm;

pub use adam::{clip_global_norm, OptimState};
pub use checkpoint::{load_net, save_net, NetCheckpointHeader};
pub use init::{orthogonal_init, orthogonal_init_layer};
pub use net::{Activation, ForwardTrace, ParamNet};
pub use norm::RunningNorm;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("input width mismatch: net expects {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("gradient slice has length {got}, net has {expected} parameters")]
    GradientShape { expected: usize, got: usize },
    #[error("non-finite gradient at parameter index {index}; update rejected")]
    NonFiniteGradient { index: usize },
    #[error("non-finite parameter after update at index {index}")]
    NonFiniteParameter { index: usize },
    #[error("checkpoint format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! Minimal dense linear algebra and feed-forward layers with hand-written
//! gradients — the numeric substrate for training. Everything is 64-bit and
//! deterministic: parallel products partition output rows and keep a fixed
//! within-row reduction order, so results do not depend on thread count.

mod matrix;
mod mlp;
mod optim;

pub use matrix::Matrix;
pub use mlp::{init_mlp, l2_normalize_rows, l2_normalize_rows_backward, ForwardCache, Linear,
              LinearGrads, Mlp};
pub use optim::{clip_grad_norm, AdamWState};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
}

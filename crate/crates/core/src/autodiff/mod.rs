//! Minimal dense reverse-mode automatic differentiation over 2-D tensors,
//! plus an Adam optimizer. Everything is 64-bit; tensors live on an
//! append-only tape whose creation order is a topological order, so the
//! backward pass is a single reverse sweep.

mod adam;
mod tape;

pub use adam::Adam;
pub use tape::{AdError, Tape, TensorId};

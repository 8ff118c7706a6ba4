//! Minimal dense-tensor value graph with reverse-mode differentiation,
//! an Adam optimizer, seeded randomness, and the checkpoint file format.
//!
//! Everything runs in f64 on a single thread; identical seeds give
//! bit-identical trajectories.

mod adam;
pub mod checkpoint;
mod fd;
mod graph;
mod params;
mod rng;
mod tensor;

pub use adam::{AdamHyper, OptimizerState};
pub use fd::fd_check;
pub use graph::{Graph, NodeId};
pub use params::ParamStore;
pub use rng::Rng;
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: String,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("{op}: index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        op: String,
        index: usize,
        bound: usize,
    },
}

/// FNV-1a 64-bit. Fixed constants; part of the fingerprint and checksum
/// reproducibility contract.
pub const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64_init() -> u64 {
    FNV_OFFSET
}

pub fn fnv1a64_update(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    fnv1a64_update(fnv1a64_init(), bytes)
}

//! Nyström low-rank approximation of symmetric positive semidefinite
//! matrices, matrix coherence, and the experiment harness that relates the
//! two.
//!
//! - [`linalg`]: dense symmetric substrate (eigendecomposition, pseudo-inverse, rank).
//! - [`kernel`]: CSV datasets and linear / RBF Gram matrices.
//! - [`nystrom`]: column sampling and the approximation `C W_k⁺ Cᵀ`.
//! - [`coherence`]: `μ(V_r)`, growth curves and sample-size bounds.
//! - [`synth`]: synthetic SPSD matrices with controlled rank, decay and coherence.
//! - [`harness`]: experiment drivers and record output used by the `nyscoh` binary.

pub mod coherence;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod linalg;
pub mod nystrom;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};

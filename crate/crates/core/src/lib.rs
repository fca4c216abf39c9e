//! FAST: a compact hybrid CNN/transformer audio classifier with
//! Lipschitz-continuous attention, built from scratch.
//!
//! The crate provides the full stack needed to assemble, verify and train
//! the model at desk scale:
//!
//! - [`tensor`]: dense tensors with reverse-mode automatic differentiation
//! - [`audio`]: WAV decoding and log-mel spectrogram extraction
//! - [`lipschitz`]: CenterNorm, scaled cosine-similarity attention,
//!   weighted residual shortcuts, and the Lipschitz transformer block
//! - [`baseline`]: the standard (LayerNorm + dot-product) block used as
//!   the ablation counterpart
//! - [`mobilevit`]: inverted residual blocks and the unfold/transform/fold
//!   hybrid block
//! - [`model`]: configuration, assembly, checkpoints
//! - [`train`]: Adam, losses, metrics, synthetic data, the training loop
//!   and the stability experiment
//! - [`oracle`]: independent brute-force oracles (finite differences,
//!   naive convolution, spectral norms, empirical Lipschitz estimates)

pub mod audio;
pub mod baseline;
pub mod error;
pub mod init;
pub mod lipschitz;
pub mod mobilevit;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use rng::Rng;
pub use tensor::{Scalar, Tape, Tensor};

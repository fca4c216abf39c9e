//! Shared fixtures for the criterion benchmarks.

use fast_core::model::{build, FastModel, ModelConfig};
use fast_core::{Rng, Tensor};

pub fn tiny_model() -> FastModel<f32> {
    build(&ModelConfig::tiny(2), 0).expect("tiny config is valid")
}

pub fn spectrogram_input(seed: u64) -> Tensor<f32> {
    let (h, w) = ModelConfig::tiny(2).image_size;
    let mut rng = Rng::new(seed);
    Tensor::randn(&[h, w, 1], 1.0, &mut rng)
}

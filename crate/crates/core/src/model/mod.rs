//! Model configuration, assembly, forward pass and parameter accounting.

pub mod checkpoint;

use crate::error::{Error, Result};
use crate::init::{kaiming_conv, trunc_normal_linear, zero_bias};
use crate::mobilevit::{
    fast_block, inverted_residual, BlockVariant, FastBlockConfig, FastBlockParams,
    InvertedResidualParams,
};
use crate::rng::Rng;
use crate::tensor::{Scalar, Tape, Tensor};
use serde::{Deserialize, Serialize};

/// Attention heads per transformer block (divides every hidden dim).
pub const HEADS: usize = 4;
/// MLP expansion ratio inside transformer blocks.
pub const MLP_RATIO: usize = 2;
/// Hidden width of the classifier head.
pub const HEAD_HIDDEN: usize = 256;
/// Stochastic-depth rate at the deepest transformer block; shallower
/// blocks interpolate linearly from zero.
pub const DROPPATH_MAX: f64 = 0.1;

/// Hyperparameter record defining one model instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Input spectrogram geometry (mel bins, frames).
    pub image_size: (usize, usize),
    /// Transformer width at the three hybrid stages.
    pub hidden_dims: (usize, usize, usize),
    /// Channel waypoints: stem, 9 block outputs, final projection.
    pub channels: Vec<usize>,
    pub num_classes: usize,
    /// Inverted-residual expansion ratio.
    pub expansion: usize,
    /// Spatial kernel for the stem and local convolutions.
    pub kernel: usize,
    /// Unfold patch (width, height).
    pub patch_size: (usize, usize),
    /// Transformer depth at the three hybrid stages.
    pub depths: (usize, usize, usize),
}

impl ModelConfig {
    /// Production-size configuration: 128x1876 input, dims (96, 128, 144),
    /// channels (16, 32, 48, 48, 64, 64, 80, 80, 96, 96, 384),
    /// depths (2, 4, 4), expansion 4, 3x3 kernels, 2x2 patches.
    pub fn full(num_classes: usize) -> Self {
        ModelConfig {
            image_size: (128, 1876),
            hidden_dims: (96, 128, 144),
            channels: vec![16, 32, 48, 48, 64, 64, 80, 80, 96, 96, 384],
            num_classes,
            expansion: 4,
            kernel: 3,
            patch_size: (2, 2),
            depths: (2, 4, 4),
        }
    }

    /// Small configuration for tests and smoke experiments.
    pub fn tiny(num_classes: usize) -> Self {
        ModelConfig {
            image_size: (32, 64),
            hidden_dims: (8, 8, 8),
            channels: vec![4, 8, 8, 8, 12, 12, 16, 16, 16, 16, 32],
            num_classes,
            expansion: 4,
            kernel: 3,
            patch_size: (2, 2),
            depths: (1, 1, 1),
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: ModelConfig = serde_json::from_str(json).map_err(|e| Error::Parse {
            what: format!("model config JSON: {e}"),
            offset: None,
            field: None,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.len() != 11 {
            return Err(Error::Config(format!(
                "channels must list 11 waypoints, got {}",
                self.channels.len()
            )));
        }
        if self.channels.contains(&0) {
            return Err(Error::Config("channels must all be positive".into()));
        }
        // hybrid blocks preserve channel count at their stage
        for (a, b) in [(4, 5), (6, 7), (8, 9)] {
            if self.channels[a] != self.channels[b] {
                return Err(Error::Config(format!(
                    "channels[{a}] ({}) must equal channels[{b}] ({}): hybrid blocks preserve width",
                    self.channels[a], self.channels[b]
                )));
            }
        }
        let dims = [self.hidden_dims.0, self.hidden_dims.1, self.hidden_dims.2];
        for d in dims {
            if d < 2 {
                return Err(Error::Config(format!(
                    "hidden_dims entries must be >= 2 for CenterNorm, got {d}"
                )));
            }
            if d % HEADS != 0 {
                return Err(Error::Config(format!(
                    "hidden_dims entries must be divisible by {HEADS} heads, got {d}"
                )));
            }
        }
        if self.num_classes == 0 {
            return Err(Error::Config("num_classes must be positive".into()));
        }
        if self.expansion == 0 {
            return Err(Error::Config("expansion must be positive".into()));
        }
        if self.kernel == 0 || self.kernel.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "kernel must be odd and positive, got {}",
                self.kernel
            )));
        }
        if self.patch_size.0 == 0 || self.patch_size.1 == 0 {
            return Err(Error::Config("patch_size must be positive".into()));
        }
        let (h, w) = self.image_size;
        if h < 32 || w < 32 {
            return Err(Error::Config(format!(
                "image_size must be at least 32x32 to survive five stride-2 stages, got ({h}, {w})"
            )));
        }
        Ok(())
    }
}

/// One trunk layer.
#[derive(Debug, Clone)]
pub enum TrunkLayer<T: Scalar> {
    Inverted(InvertedResidualParams<T>),
    Hybrid(FastBlockParams<T>),
}

/// The assembled network.
#[derive(Debug, Clone)]
pub struct FastModel<T: Scalar> {
    pub config: ModelConfig,
    pub variant: BlockVariant,
    stem_w: Tensor<T>,
    stem_b: Tensor<T>,
    layers: Vec<TrunkLayer<T>>,
    final_w: Tensor<T>,
    final_b: Tensor<T>,
    head1_w: Tensor<T>,
    head1_b: Tensor<T>,
    head2_w: Tensor<T>,
    head2_b: Tensor<T>,
}

/// Deterministic assembly from a config and seed.
pub fn build<T: Scalar>(config: &ModelConfig, seed: u64) -> Result<FastModel<T>> {
    build_variant(config, seed, BlockVariant::Lipschitz)
}

pub fn build_variant<T: Scalar>(
    config: &ModelConfig,
    seed: u64,
    variant: BlockVariant,
) -> Result<FastModel<T>> {
    config.validate()?;
    let mut rng = Rng::new(seed);
    let ch = &config.channels;
    let k = config.kernel;
    let dims = [config.hidden_dims.0, config.hidden_dims.1, config.hidden_dims.2];
    let depths = [config.depths.0, config.depths.1, config.depths.2];

    // linear stochastic-depth schedule over all transformer blocks
    let total_blocks: usize = depths.iter().sum();
    let mut next_block_index = 0usize;
    let mut droppath_for = |depth: usize| -> Vec<f64> {
        (0..depth)
            .map(|_| {
                let i = next_block_index;
                next_block_index += 1;
                if total_blocks > 1 {
                    DROPPATH_MAX * i as f64 / (total_blocks - 1) as f64
                } else {
                    0.0
                }
            })
            .collect()
    };

    let stem_w = kaiming_conv(k, k, 1, ch[0], &mut rng);
    let stem_b = zero_bias(ch[0]);

    let mut layers = Vec::new();
    let ir = |cin: usize, cout: usize, s: usize, rng: &mut Rng| {
        TrunkLayer::Inverted(InvertedResidualParams::init(cin, cout, s, config.expansion, rng))
    };
    let hybrid = |c: usize, dim: usize, depth: usize, droppath: Vec<f64>, rng: &mut Rng| {
        TrunkLayer::Hybrid(FastBlockParams::init(
            &FastBlockConfig {
                channels: c,
                dim,
                depth,
                heads: HEADS,
                mlp_ratio: MLP_RATIO,
                patch: config.patch_size,
                droppath,
                variant,
            },
            rng,
        ))
    };

    layers.push(ir(ch[0], ch[1], 1, &mut rng)); // stage 1
    layers.push(ir(ch[1], ch[2], 2, &mut rng)); // stage 2
    layers.push(ir(ch[2], ch[3], 1, &mut rng));
    layers.push(ir(ch[3], ch[4], 2, &mut rng)); // stage 3
    let dp = droppath_for(depths[0]);
    layers.push(hybrid(ch[5], dims[0], depths[0], dp, &mut rng));
    layers.push(ir(ch[5], ch[6], 2, &mut rng)); // stage 4
    let dp = droppath_for(depths[1]);
    layers.push(hybrid(ch[7], dims[1], depths[1], dp, &mut rng));
    layers.push(ir(ch[7], ch[8], 2, &mut rng)); // stage 5
    let dp = droppath_for(depths[2]);
    layers.push(hybrid(ch[9], dims[2], depths[2], dp, &mut rng));

    let final_w = kaiming_conv(1, 1, ch[9], ch[10], &mut rng);
    let final_b = zero_bias(ch[10]);
    let head1_w = trunc_normal_linear(ch[10], HEAD_HIDDEN, &mut rng);
    let head1_b = zero_bias(HEAD_HIDDEN);
    let head2_w = trunc_normal_linear(HEAD_HIDDEN, config.num_classes, &mut rng);
    let head2_b = zero_bias(config.num_classes);

    Ok(FastModel {
        config: config.clone(),
        variant,
        stem_w,
        stem_b,
        layers,
        final_w,
        final_b,
        head1_w,
        head1_b,
        head2_w,
        head2_b,
    })
}

impl<T: Scalar> FastModel<T> {
    /// Every learnable tensor, named, in a stable order.
    pub fn named_params(&self) -> Vec<(String, Tensor<T>)> {
        let mut out = Vec::new();
        out.push(("stem.w".to_string(), self.stem_w.clone()));
        out.push(("stem.b".to_string(), self.stem_b.clone()));
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                TrunkLayer::Inverted(p) => p.named_params(&format!("layer{i}.ir"), &mut out),
                TrunkLayer::Hybrid(p) => p.named_params(&format!("layer{i}.hybrid"), &mut out),
            }
        }
        out.push(("final.w".to_string(), self.final_w.clone()));
        out.push(("final.b".to_string(), self.final_b.clone()));
        out.push(("head1.w".to_string(), self.head1_w.clone()));
        out.push(("head1.b".to_string(), self.head1_b.clone()));
        out.push(("head2.w".to_string(), self.head2_w.clone()));
        out.push(("head2.b".to_string(), self.head2_b.clone()));
        out
    }

    pub fn parameters(&self) -> Vec<Tensor<T>> {
        self.named_params().into_iter().map(|(_, t)| t).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.named_params().iter().map(|(_, t)| t.numel()).sum()
    }

    pub fn zero_grads(&self) {
        for p in self.parameters() {
            p.zero_grad();
        }
    }

    /// Override every stochastic-depth rate (no-op for baseline blocks).
    pub fn set_droppath(&mut self, prob: f64) {
        for layer in &mut self.layers {
            if let TrunkLayer::Hybrid(p) = layer {
                if let crate::mobilevit::TransformerStack::Lipschitz(blocks) = &mut p.transformer {
                    for b in blocks {
                        b.wrs1.droppath_prob = prob;
                        b.wrs2.droppath_prob = prob;
                    }
                }
            }
        }
    }

    /// Single-sample trunk + head: `(H, W, 1)` to raw logits `[classes]`.
    pub fn forward_single(
        &self,
        tape: &Tape<T>,
        x: &Tensor<T>,
        training: bool,
        rng: &mut Rng,
    ) -> Result<Tensor<T>> {
        let (h, w) = self.config.image_size;
        if x.shape() != [h, w, 1] {
            return Err(Error::Dimension(format!(
                "model expects input ({h}, {w}, 1), got {:?}",
                x.shape()
            )));
        }
        let pad = self.config.kernel / 2;
        let mut t = tape.silu(&tape.conv2d(x, &self.stem_w, Some(&self.stem_b), 2, pad));
        for layer in &self.layers {
            t = match layer {
                TrunkLayer::Inverted(p) => inverted_residual(tape, &t, p),
                TrunkLayer::Hybrid(p) => fast_block(tape, &t, p, training, rng),
            };
        }
        let t = tape.silu(&tape.conv2d(&t, &self.final_w, Some(&self.final_b), 1, 0));
        let pooled = tape.global_average_pool(&t);
        let row = tape.reshape(&pooled, &[1, self.config.channels[10]]);
        let hidden = tape.silu(&tape.add(&tape.matmul(&row, &self.head1_w), &self.head1_b));
        let logits = tape.add(&tape.matmul(&hidden, &self.head2_w), &self.head2_b);
        Ok(tape.reshape(&logits, &[self.config.num_classes]))
    }

    /// Batched forward: `(B, H, W, 1)` to raw logits `(B, classes)`.
    pub fn forward(
        &self,
        tape: &Tape<T>,
        x: &Tensor<T>,
        training: bool,
        rng: &mut Rng,
    ) -> Result<Tensor<T>> {
        if x.rank() != 4 {
            return Err(Error::Dimension(format!(
                "model expects a (B, H, W, 1) batch, got {:?}",
                x.shape()
            )));
        }
        let batch = x.shape()[0];
        if batch == 0 {
            return Err(Error::Usage("empty batch".into()));
        }
        let mut rows = Vec::with_capacity(batch);
        for b in 0..batch {
            let sample = tape.select(x, b);
            rows.push(self.forward_single(tape, &sample, training, rng)?);
        }
        Ok(tape.stack(&rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config_validates() {
        assert!(ModelConfig::full(2).validate().is_ok());
        assert!(ModelConfig::tiny(2).validate().is_ok());
    }

    #[test]
    fn bad_channel_count_rejected() {
        let mut cfg = ModelConfig::tiny(2);
        cfg.channels.pop();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn indivisible_hidden_dim_rejected() {
        let mut cfg = ModelConfig::tiny(2);
        cfg.hidden_dims = (6, 8, 8);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn json_roundtrip_exact_field_names() {
        let cfg = ModelConfig::full(2);
        let json = cfg.to_json();
        for key in [
            "image_size",
            "hidden_dims",
            "channels",
            "num_classes",
            "expansion",
            "kernel",
            "patch_size",
            "depths",
        ] {
            assert!(json.contains(key), "missing key {key}");
        }
        assert_eq!(ModelConfig::from_json(&json).unwrap(), cfg);
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = build::<f32>(&ModelConfig::tiny(2), 42).unwrap();
        let b = build::<f32>(&ModelConfig::tiny(2), 42).unwrap();
        for ((na, ta), (nb, tb)) in a.named_params().iter().zip(b.named_params().iter()) {
            assert_eq!(na, nb);
            assert_eq!(ta.to_vec(), tb.to_vec(), "parameter {na} differs");
        }
    }

    #[test]
    fn parameter_count_invariant_to_seed() {
        let a = build::<f32>(&ModelConfig::tiny(2), 1).unwrap();
        let b = build::<f32>(&ModelConfig::tiny(2), 2).unwrap();
        assert_eq!(a.parameter_count(), b.parameter_count());
    }

    #[test]
    fn tiny_forward_shapes() {
        let model = build::<f32>(&ModelConfig::tiny(2), 0).unwrap();
        let tape = Tape::inference();
        let mut rng = Rng::new(0);
        let x = Tensor::randn(&[3, 32, 64, 1], 1.0, &mut rng);
        let y = model.forward(&tape, &x, false, &mut rng).unwrap();
        assert_eq!(y.shape(), &[3, 2]);
        assert!(y.all_finite());
    }

    #[test]
    fn wrong_spatial_dims_is_dimension_error() {
        let model = build::<f32>(&ModelConfig::tiny(2), 0).unwrap();
        let tape = Tape::inference();
        let mut rng = Rng::new(0);
        let x = Tensor::zeros(&[1, 16, 16, 1]);
        assert!(matches!(
            model.forward(&tape, &x, false, &mut rng),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn eval_forward_deterministic() {
        let model = build::<f32>(&ModelConfig::tiny(2), 7).unwrap();
        let tape = Tape::inference();
        let mut rng = Rng::new(3);
        let x = Tensor::randn(&[2, 32, 64, 1], 1.0, &mut rng);
        let mut r1 = Rng::new(0);
        let mut r2 = Rng::new(99); // eval must not consult it
        let y1 = model.forward(&tape, &x, false, &mut r1).unwrap();
        let y2 = model.forward(&tape, &x, false, &mut r2).unwrap();
        assert_eq!(y1.to_vec(), y2.to_vec());
    }

    #[test]
    fn amplified_inputs_keep_logits_finite() {
        // SCSA boundedness propagates: a 1e3-scaled input must not blow up
        let model = build::<f32>(&ModelConfig::tiny(2), 5).unwrap();
        let tape = Tape::inference();
        let mut rng = Rng::new(8);
        let x = Tensor::randn(&[1, 32, 64, 1], 1e3, &mut rng);
        let y = model.forward(&tape, &x, false, &mut rng).unwrap();
        assert!(y.all_finite(), "logits not finite: {:?}", y);
    }
}

//! Convolutional machinery of the hybrid architecture: MobileNetV2
//! inverted residual blocks, lossless patch unfold/fold, and the hybrid
//! block that runs a shared transformer stack across patches.

use crate::baseline::{baseline_block, BaselineBlockParams};
use crate::init::{kaiming_conv, kaiming_depthwise, zero_bias};
use crate::lipschitz::{lipschitz_block, LipschitzBlockParams};
use crate::rng::Rng;
use crate::tensor::{Scalar, Tape, Tensor};
use std::rc::Rc;

/// Which transformer flavor sits inside the hybrid blocks. `Baseline`
/// exists solely for the stability ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockVariant {
    Lipschitz,
    Baseline,
}

/// MobileNetV2 inverted residual: pointwise expand, depthwise 3x3,
/// pointwise project, with a shortcut when stride is 1 and channels match.
#[derive(Debug, Clone)]
pub struct InvertedResidualParams<T: Scalar> {
    pub expand_w: Tensor<T>,
    pub expand_b: Tensor<T>,
    pub depthwise_w: Tensor<T>,
    pub depthwise_b: Tensor<T>,
    pub project_w: Tensor<T>,
    pub project_b: Tensor<T>,
    pub stride: usize,
}

impl<T: Scalar> InvertedResidualParams<T> {
    pub fn init(
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        expansion: usize,
        rng: &mut Rng,
    ) -> Self {
        assert!(stride == 1 || stride == 2, "stride must be 1 or 2, got {stride}");
        let mid = in_channels * expansion;
        InvertedResidualParams {
            expand_w: kaiming_conv(1, 1, in_channels, mid, rng),
            expand_b: zero_bias(mid),
            depthwise_w: kaiming_depthwise(3, 3, mid, rng),
            depthwise_b: zero_bias(mid),
            project_w: kaiming_conv(1, 1, mid, out_channels, rng),
            project_b: zero_bias(out_channels),
            stride,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.expand_w.shape()[2]
    }

    pub fn out_channels(&self) -> usize {
        self.project_w.shape()[3]
    }

    pub fn named_params(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>) {
        out.push((format!("{prefix}.expand_w"), self.expand_w.clone()));
        out.push((format!("{prefix}.expand_b"), self.expand_b.clone()));
        out.push((format!("{prefix}.depthwise_w"), self.depthwise_w.clone()));
        out.push((format!("{prefix}.depthwise_b"), self.depthwise_b.clone()));
        out.push((format!("{prefix}.project_w"), self.project_w.clone()));
        out.push((format!("{prefix}.project_b"), self.project_b.clone()));
    }
}

pub fn inverted_residual<T: Scalar>(
    tape: &Tape<T>,
    x: &Tensor<T>,
    p: &InvertedResidualParams<T>,
) -> Tensor<T> {
    let h = tape.conv2d(x, &p.expand_w, Some(&p.expand_b), 1, 0);
    let h = tape.silu(&h);
    let h = tape.depthwise_conv2d(&h, &p.depthwise_w, Some(&p.depthwise_b), p.stride, 1);
    let h = tape.silu(&h);
    let h = tape.conv2d(&h, &p.project_w, Some(&p.project_b), 1, 0);
    if p.stride == 1 && p.in_channels() == p.out_channels() {
        tape.add(x, &h)
    } else {
        h
    }
}

/// Rearrange `(H, W, d)` into `(P, N, d)`: `P = w*h` intra-patch pixels,
/// `N = H*W/(w*h)` patches, both row-major. Element `(p, n, :)` is the
/// p-th pixel of the n-th patch.
pub fn unfold<T: Scalar>(tape: &Tape<T>, x: &Tensor<T>, patch: (usize, usize)) -> Tensor<T> {
    let (pw, ph) = patch;
    assert_eq!(x.rank(), 3, "unfold expects (H, W, d), got {:?}", x.shape());
    let (h, w, d) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    assert!(
        ph >= 1 && pw >= 1 && h % ph == 0 && w % pw == 0,
        "unfold: patch ({pw}, {ph}) does not divide spatial extent ({h}, {w})"
    );
    let grid_w = w / pw;
    let p_total = pw * ph;
    let n_total = (h / ph) * grid_w;
    let mut map = Vec::with_capacity(p_total * n_total * d);
    for p in 0..p_total {
        let (ir, ic) = (p / pw, p % pw);
        for n in 0..n_total {
            let (pr, pc) = (n / grid_w, n % grid_w);
            let (i, j) = (pr * ph + ir, pc * pw + ic);
            for c in 0..d {
                map.push(((i * w + j) * d + c) as i64);
            }
        }
    }
    tape.gather_map(x, &[p_total, n_total, d], Rc::new(map))
}

/// Exact inverse of [`unfold`]: `(P, N, d)` back to `(H, W, d)`.
pub fn fold<T: Scalar>(
    tape: &Tape<T>,
    xu: &Tensor<T>,
    patch: (usize, usize),
    out_hw: (usize, usize),
) -> Tensor<T> {
    let (pw, ph) = patch;
    let (h, w) = out_hw;
    assert_eq!(xu.rank(), 3, "fold expects (P, N, d), got {:?}", xu.shape());
    let (p_total, n_total, d) = (xu.shape()[0], xu.shape()[1], xu.shape()[2]);
    assert_eq!(p_total, pw * ph, "fold: P {p_total} != w*h {}", pw * ph);
    assert_eq!(
        n_total * p_total,
        h * w,
        "fold: {p_total}x{n_total} patches cannot tile ({h}, {w})"
    );
    let grid_w = w / pw;
    let mut map = Vec::with_capacity(h * w * d);
    for i in 0..h {
        for j in 0..w {
            let p = (i % ph) * pw + (j % pw);
            let n = (i / ph) * grid_w + (j / pw);
            for c in 0..d {
                map.push(((p * n_total + n) * d + c) as i64);
            }
        }
    }
    tape.gather_map(xu, &[h, w, d], Rc::new(map))
}

/// The shared per-position transformer stack.
#[derive(Debug, Clone)]
pub enum TransformerStack<T: Scalar> {
    Lipschitz(Vec<LipschitzBlockParams<T>>),
    Baseline(Vec<BaselineBlockParams<T>>),
}

impl<T: Scalar> TransformerStack<T> {
    pub fn depth(&self) -> usize {
        match self {
            TransformerStack::Lipschitz(blocks) => blocks.len(),
            TransformerStack::Baseline(blocks) => blocks.len(),
        }
    }

    pub fn forward(
        &self,
        tape: &Tape<T>,
        mut x: Tensor<T>,
        training: bool,
        rng: &mut Rng,
    ) -> Tensor<T> {
        match self {
            TransformerStack::Lipschitz(blocks) => {
                for b in blocks {
                    x = lipschitz_block(tape, &x, b, training, rng);
                }
            }
            TransformerStack::Baseline(blocks) => {
                for b in blocks {
                    x = baseline_block(tape, &x, b);
                }
            }
        }
        x
    }

    pub fn named_params(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>) {
        match self {
            TransformerStack::Lipschitz(blocks) => {
                for (i, b) in blocks.iter().enumerate() {
                    b.named_params(&format!("{prefix}.block{i}"), out);
                }
            }
            TransformerStack::Baseline(blocks) => {
                for (i, b) in blocks.iter().enumerate() {
                    b.named_params(&format!("{prefix}.block{i}"), out);
                }
            }
        }
    }
}

/// Hybrid block: local convs lift C -> d, unfold, run the shared
/// transformer stack across patches per intra-patch position, fold back,
/// project d -> C, then fuse with the original input by concatenation and
/// a pointwise convolution.
#[derive(Debug, Clone)]
pub struct FastBlockParams<T: Scalar> {
    pub local3x3_w: Tensor<T>,
    pub local3x3_b: Tensor<T>,
    pub local_point_w: Tensor<T>,
    pub local_point_b: Tensor<T>,
    pub transformer: TransformerStack<T>,
    pub project_w: Tensor<T>,
    pub project_b: Tensor<T>,
    pub fusion_w: Tensor<T>,
    pub fusion_b: Tensor<T>,
    pub patch: (usize, usize),
}

/// Everything needed to build one hybrid block.
pub struct FastBlockConfig {
    pub channels: usize,
    pub dim: usize,
    pub depth: usize,
    pub heads: usize,
    pub mlp_ratio: usize,
    pub patch: (usize, usize),
    /// One stochastic-depth rate per transformer block.
    pub droppath: Vec<f64>,
    pub variant: BlockVariant,
}

impl<T: Scalar> FastBlockParams<T> {
    pub fn init(cfg: &FastBlockConfig, rng: &mut Rng) -> Self {
        assert_eq!(cfg.droppath.len(), cfg.depth, "one droppath rate per block");
        let c = cfg.channels;
        let d = cfg.dim;
        let transformer = match cfg.variant {
            BlockVariant::Lipschitz => TransformerStack::Lipschitz(
                cfg.droppath
                    .iter()
                    .map(|&dp| LipschitzBlockParams::init(d, cfg.heads, cfg.mlp_ratio, dp, rng))
                    .collect(),
            ),
            BlockVariant::Baseline => TransformerStack::Baseline(
                (0..cfg.depth)
                    .map(|_| BaselineBlockParams::init(d, cfg.heads, cfg.mlp_ratio, rng))
                    .collect(),
            ),
        };
        FastBlockParams {
            local3x3_w: kaiming_conv(3, 3, c, c, rng),
            local3x3_b: zero_bias(c),
            local_point_w: kaiming_conv(1, 1, c, d, rng),
            local_point_b: zero_bias(d),
            transformer,
            project_w: kaiming_conv(1, 1, d, c, rng),
            project_b: zero_bias(c),
            fusion_w: kaiming_conv(1, 1, 2 * c, c, rng),
            fusion_b: zero_bias(c),
            patch: cfg.patch,
        }
    }

    pub fn channels(&self) -> usize {
        self.local3x3_w.shape()[2]
    }

    pub fn named_params(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>) {
        out.push((format!("{prefix}.local3x3_w"), self.local3x3_w.clone()));
        out.push((format!("{prefix}.local3x3_b"), self.local3x3_b.clone()));
        out.push((format!("{prefix}.local_point_w"), self.local_point_w.clone()));
        out.push((format!("{prefix}.local_point_b"), self.local_point_b.clone()));
        self.transformer
            .named_params(&format!("{prefix}.transformer"), out);
        out.push((format!("{prefix}.project_w"), self.project_w.clone()));
        out.push((format!("{prefix}.project_b"), self.project_b.clone()));
        out.push((format!("{prefix}.fusion_w"), self.fusion_w.clone()));
        out.push((format!("{prefix}.fusion_b"), self.fusion_b.clone()));
    }
}

pub fn fast_block<T: Scalar>(
    tape: &Tape<T>,
    x: &Tensor<T>,
    p: &FastBlockParams<T>,
    training: bool,
    rng: &mut Rng,
) -> Tensor<T> {
    let (h, w) = (x.shape()[0], x.shape()[1]);
    let (pw, ph) = p.patch;

    // local representation: 3x3 spatial then pointwise lift C -> d
    let local = tape.silu(&tape.conv2d(x, &p.local3x3_w, Some(&p.local3x3_b), 1, 1));
    let lifted = tape.conv2d(&local, &p.local_point_w, Some(&p.local_point_b), 1, 0);

    // pad odd extents up to patch multiples, fold back and crop after
    let h2 = h.div_ceil(ph) * ph;
    let w2 = w.div_ceil(pw) * pw;
    let padded = tape.pad_hw(&lifted, h2, w2);

    let unfolded = unfold(tape, &padded, p.patch);
    let globally_mixed = p.transformer.forward(tape, unfolded, training, rng);
    let folded = fold(tape, &globally_mixed, p.patch, (h2, w2));
    let cropped = tape.crop_hw(&folded, h, w);

    let projected = tape.silu(&tape.conv2d(&cropped, &p.project_w, Some(&p.project_b), 1, 0));
    let fused_in = tape.concat_last(x, &projected);
    tape.silu(&tape.conv2d(&fused_in, &p.fusion_w, Some(&p.fusion_b), 1, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> Rng {
        Rng::new(0xb10c)
    }

    #[test]
    fn inverted_residual_zero_weights_is_identity() {
        let tape = Tape::inference();
        let mut r = rng();
        let p = InvertedResidualParams::<f64>::init(3, 3, 1, 4, &mut r);
        p.expand_w.update_data(|w| w.fill(0.0));
        p.depthwise_w.update_data(|w| w.fill(0.0));
        p.project_w.update_data(|w| w.fill(0.0));
        let x = Tensor::randn(&[4, 4, 3], 1.0, &mut r);
        let y = inverted_residual(&tape, &x, &p);
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn inverted_residual_stride_two_halves_extent() {
        let tape = Tape::inference();
        let mut r = rng();
        let p = InvertedResidualParams::<f64>::init(3, 6, 2, 4, &mut r);
        let x = Tensor::randn(&[8, 8, 3], 1.0, &mut r);
        let y = inverted_residual(&tape, &x, &p);
        assert_eq!(y.shape(), &[4, 4, 6]);
    }

    #[test]
    fn unfold_degenerate_patch_flattens() {
        let tape = Tape::inference();
        let x = Tensor::new((0..12).map(|i| i as f64).collect(), &[3, 4, 1]);
        let y = unfold(&tape, &x, (1, 1));
        assert_eq!(y.shape(), &[1, 12, 1]);
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn unfold_hand_case_4x4() {
        // 4x4 input, values 0..15 row-major, patch (2,2):
        // position p=0 visits the top-left pixel of each patch: 0, 2, 8, 10
        let tape = Tape::inference();
        let x = Tensor::new((0..16).map(|i| i as f64).collect(), &[4, 4, 1]);
        let y = unfold(&tape, &x, (2, 2));
        assert_eq!(y.shape(), &[4, 4, 1]);
        assert_eq!(&y.to_vec()[0..4], &[0.0, 2.0, 8.0, 10.0]);
        // p=1 is the top-right pixel of each patch
        assert_eq!(&y.to_vec()[4..8], &[1.0, 3.0, 9.0, 11.0]);
    }

    #[test]
    fn fold_inverts_unfold_bit_exactly() {
        let tape = Tape::inference();
        let mut r = rng();
        let x = Tensor::<f64>::randn(&[8, 6, 5], 1.0, &mut r);
        let u = unfold(&tape, &x, (2, 2));
        let back = fold(&tape, &u, (2, 2), (8, 6));
        assert_eq!(back.to_vec(), x.to_vec());
    }

    #[test]
    #[should_panic(expected = "does not divide")]
    fn unfold_divisibility_enforced() {
        let tape = Tape::<f64>::inference();
        let x = Tensor::zeros(&[5, 4, 1]);
        let _ = unfold(&tape, &x, (2, 2));
    }

    #[test]
    fn fast_block_preserves_shape() {
        let tape = Tape::inference();
        let mut r = rng();
        let cfg = FastBlockConfig {
            channels: 16,
            dim: 8,
            depth: 1,
            heads: 4,
            mlp_ratio: 2,
            patch: (2, 2),
            droppath: vec![0.0],
            variant: BlockVariant::Lipschitz,
        };
        let p = FastBlockParams::<f64>::init(&cfg, &mut r);
        let x = Tensor::randn(&[8, 8, 16], 1.0, &mut r);
        let y = fast_block(&tape, &x, &p, false, &mut r);
        assert_eq!(y.shape(), &[8, 8, 16]);
    }

    #[test]
    fn fast_block_pads_odd_extents() {
        let tape = Tape::inference();
        let mut r = rng();
        let cfg = FastBlockConfig {
            channels: 4,
            dim: 8,
            depth: 1,
            heads: 2,
            mlp_ratio: 2,
            patch: (2, 2),
            droppath: vec![0.0],
            variant: BlockVariant::Lipschitz,
        };
        let p = FastBlockParams::<f64>::init(&cfg, &mut r);
        let x = Tensor::randn(&[5, 7, 4], 1.0, &mut r);
        let y = fast_block(&tape, &x, &p, false, &mut r);
        assert_eq!(y.shape(), &[5, 7, 4]);
    }

    #[test]
    fn fast_block_zero_depth_still_works() {
        let tape = Tape::inference();
        let mut r = rng();
        let cfg = FastBlockConfig {
            channels: 4,
            dim: 6,
            depth: 0,
            heads: 2,
            mlp_ratio: 2,
            patch: (2, 2),
            droppath: vec![],
            variant: BlockVariant::Lipschitz,
        };
        let p = FastBlockParams::<f64>::init(&cfg, &mut r);
        let x = Tensor::randn(&[4, 4, 4], 1.0, &mut r);
        let y = fast_block(&tape, &x, &p, false, &mut r);
        assert_eq!(y.shape(), &[4, 4, 4]);
    }

    #[test]
    fn transformer_stack_shared_across_positions() {
        // parameter count must not depend on P: the stack is one set of
        // blocks regardless of patch size
        let mut r = rng();
        let make = |patch: (usize, usize), rng: &mut Rng| {
            let cfg = FastBlockConfig {
                channels: 4,
                dim: 8,
                depth: 2,
                heads: 2,
                mlp_ratio: 2,
                patch,
                droppath: vec![0.0, 0.0],
                variant: BlockVariant::Lipschitz,
            };
            let p = FastBlockParams::<f64>::init(&cfg, rng);
            let mut params = Vec::new();
            p.named_params("b", &mut params);
            params.iter().map(|(_, t)| t.numel()).sum::<usize>()
        };
        assert_eq!(make((2, 2), &mut r), make((4, 4), &mut r));
    }

    #[test]
    fn receptive_field_is_global() {
        // perturb one input pixel; with the transformer mixing patches the
        // output must change far outside any 3x3 neighborhood
        let tape = Tape::inference();
        let mut r = rng();
        let cfg = FastBlockConfig {
            channels: 4,
            dim: 8,
            depth: 1,
            heads: 2,
            mlp_ratio: 2,
            patch: (2, 2),
            droppath: vec![0.0],
            variant: BlockVariant::Lipschitz,
        };
        let p = FastBlockParams::<f64>::init(&cfg, &mut r);
        let x = Tensor::randn(&[8, 8, 4], 1.0, &mut r);
        let y0 = fast_block(&tape, &x, &p, false, &mut r).to_vec();
        let mut bumped = x.to_vec();
        bumped[0] += 1.0; // pixel (0, 0), channel 0
        let x1 = Tensor::new(bumped, &[8, 8, 4]);
        let y1 = fast_block(&tape, &x1, &p, false, &mut r).to_vec();
        // look at pixel (7, 7), far outside a 3x3 neighborhood of (0, 0)
        let off = (7 * 8 + 7) * 4;
        let far_delta: f64 = (0..4).map(|c| (y1[off + c] - y0[off + c]).abs()).sum();
        assert!(far_delta > 1e-12, "far pixel unchanged: {far_delta}");
    }
}

//! Lipschitz-continuous transformer components: CenterNorm, scaled
//! cosine-similarity attention (SCSA), weighted residual shortcuts with
//! stochastic depth, and their composition into the transformer block.
//!
//! The point of every piece is a bounded Lipschitz constant:
//!
//! - CenterNorm only subtracts the mean (no variance division), so its
//!   Jacobian norm is at most `D/(D-1) * max|gamma|`.
//! - SCSA length-normalizes the q/k/v rows, so each output row is `nu`
//!   times a convex combination of unit-ball vectors: bounded no matter
//!   how large the input grows, which dot-product attention cannot offer.
//! - The residual branch is scaled by a small learnable `alpha`, keeping
//!   each block close to the identity at initialization.

use crate::rng::Rng;
use crate::tensor::{Scalar, Tape, Tensor};

/// Default smoothing inside the q/k/v row normalization.
pub const SCSA_EPS: f64 = 1e-6;
/// Default output scale; chosen so the advertised output bound is 1.
pub const SCSA_NU: f64 = 1.0;
/// Initial temperature: cosine similarities live in [-1, 1], so a
/// temperature well above 1 is needed for sharp attention.
pub const TAU_INIT: f64 = 5.0;
/// Initial residual branch scale.
pub const ALPHA_INIT: f64 = 0.1;
/// Weight init scale for projection matrices.
pub const WEIGHT_STD: f64 = 0.02;

/// Mean-subtraction normalization with learnable affine (no variance).
#[derive(Debug, Clone)]
pub struct CenterNormParams<T: Scalar> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
}

impl<T: Scalar> CenterNormParams<T> {
    pub fn init(dim: usize) -> Self {
        assert!(
            dim >= 2,
            "configuration error: CenterNorm needs D >= 2 (the D/(D-1) factor is undefined at D=1), got {dim}"
        );
        CenterNormParams {
            gamma: Tensor::param(vec![T::ONE; dim], &[dim]),
            beta: Tensor::param(vec![T::ZERO; dim], &[dim]),
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.shape()[0]
    }

    pub fn named_params(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>) {
        out.push((format!("{prefix}.gamma"), self.gamma.clone()));
        out.push((format!("{prefix}.beta"), self.beta.clone()));
    }
}

/// `gamma * D/(D-1) * (x - mean(x)) + beta`,
/// applied to every slice along the last axis.
pub fn center_norm<T: Scalar>(tape: &Tape<T>, x: &Tensor<T>, p: &CenterNormParams<T>) -> Tensor<T> {
    let d = *x.shape().last().expect("center_norm needs rank >= 1");
    assert_eq!(
        d,
        p.dim(),
        "center_norm: input last axis {d} vs params dim {}",
        p.dim()
    );
    let factor = T::from_f64(d as f64 / (d as f64 - 1.0));
    let mean = tape.mean_last_keepdim(x);
    let centered = tape.sub(x, &mean);
    let scaled = tape.mul_scalar(&centered, factor);
    let with_gamma = tape.mul(&scaled, &p.gamma);
    tape.add(&with_gamma, &p.beta)
}

/// Scaled cosine-similarity attention parameters.
///
/// `tau` is learnable per head through `log_tau` (guaranteeing tau > 0);
/// `nu` is a fixed global scale. Per head the output is scaled by
/// `nu / sqrt(heads)` so the concatenated row keeps the `nu` bound.
#[derive(Debug, Clone)]
pub struct ScsaParams<T: Scalar> {
    pub wq: Tensor<T>,
    pub wk: Tensor<T>,
    pub wv: Tensor<T>,
    pub log_tau: Tensor<T>,
    pub nu: f64,
    pub eps: f64,
    pub heads: usize,
}

impl<T: Scalar> ScsaParams<T> {
    pub fn init(dim: usize, heads: usize, rng: &mut Rng) -> Self {
        assert!(heads >= 1 && dim.is_multiple_of(heads), "heads {heads} must divide dim {dim}");
        let proj = |rng: &mut Rng| {
            Tensor::param(
                (0..dim * dim)
                    .map(|_| T::from_f64(rng.truncated_normal(WEIGHT_STD)))
                    .collect(),
                &[dim, dim],
            )
        };
        ScsaParams {
            wq: proj(rng),
            wk: proj(rng),
            wv: proj(rng),
            log_tau: Tensor::param(vec![T::from_f64(TAU_INIT.ln()); heads], &[heads]),
            nu: SCSA_NU,
            eps: SCSA_EPS,
            heads,
        }
    }

    pub fn dim(&self) -> usize {
        self.wq.shape()[0]
    }

    pub fn named_params(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>) {
        out.push((format!("{prefix}.wq"), self.wq.clone()));
        out.push((format!("{prefix}.wk"), self.wk.clone()));
        out.push((format!("{prefix}.wv"), self.wv.clone()));
        out.push((format!("{prefix}.log_tau"), self.log_tau.clone()));
    }
}

/// Normalize each last-axis row to (just under) unit length:
/// `row / sqrt(|row|^2 + eps)`.
fn normalize_rows<T: Scalar>(tape: &Tape<T>, x: &Tensor<T>, eps: f64) -> Tensor<T> {
    let sq = tape.mul(x, x);
    let sum = tape.sum_last_keepdim(&sq);
    let denom = tape.sqrt(&tape.add_scalar(&sum, T::from_f64(eps)));
    tape.div(x, &denom)
}

/// Intermediates of one SCSA application, exposed for verification:
/// normalized per-head q/k/v (`[..., h, N, dh]`), the attention matrix
/// (`[..., h, N, N]`), and the concatenated output (`[..., N, D]`).
pub struct ScsaDetails<T: Scalar> {
    pub q: Tensor<T>,
    pub k: Tensor<T>,
    pub v: Tensor<T>,
    pub attn: Tensor<T>,
    pub output: Tensor<T>,
}

/// Scaled cosine-similarity attention over `[..., N, D]`.
///
/// Heads are split after the q/k/v projections; rows are normalized per
/// head, attention is `softmax(tau * Q K^T)` row-wise, and each head's
/// `P V` is scaled by `nu / sqrt(heads)` before concatenation.
pub fn scsa<T: Scalar>(tape: &Tape<T>, x: &Tensor<T>, p: &ScsaParams<T>) -> Tensor<T> {
    scsa_with_details(tape, x, p).output
}

pub fn scsa_with_details<T: Scalar>(
    tape: &Tape<T>,
    x: &Tensor<T>,
    p: &ScsaParams<T>,
) -> ScsaDetails<T> {
    let rank = x.rank();
    assert!(rank >= 2, "scsa expects [..., N, D], got {:?}", x.shape());
    let d = x.shape()[rank - 1];
    let n = x.shape()[rank - 2];
    assert_eq!(d, p.dim(), "scsa: input dim {d} vs params dim {}", p.dim());
    let heads = p.heads;
    let dh = d / heads;

    // project, split heads, normalize rows per head
    let split = |w: &Tensor<T>| -> Tensor<T> {
        let proj = tape.matmul(x, w);
        let mut shape = proj.shape().to_vec();
        shape.pop();
        shape.push(heads);
        shape.push(dh);
        let r = tape.reshape(&proj, &shape);
        // [..., N, h, dh] -> [..., h, N, dh]
        let hr = tape.swap_axes(&r, shape.len() - 3, shape.len() - 2);
        normalize_rows(tape, &hr, p.eps)
    };
    let q = split(&p.wq);
    let k = split(&p.wk);
    let v = split(&p.wv);

    // tau: [h] -> [h, 1, 1] broadcasts over [..., h, N, N]
    let tau = tape.exp(&p.log_tau);
    let tau3 = tape.reshape(&tau, &[heads, 1, 1]);
    let scores = tape.matmul(&q, &tape.transpose(&k));
    let scaled = tape.mul(&scores, &tau3);
    let attn = tape.softmax_last(&scaled);

    let per_head = tape.matmul(&attn, &v);
    let scaled_out = tape.mul_scalar(&per_head, T::from_f64(p.nu / (heads as f64).sqrt()));

    // [..., h, N, dh] -> [..., N, h, dh] -> [..., N, D]
    let r = scaled_out.rank();
    let merged = tape.swap_axes(&scaled_out, r - 3, r - 2);
    let mut out_shape = x.shape().to_vec();
    out_shape[rank - 2] = n;
    out_shape[rank - 1] = d;
    let output = tape.reshape(&merged, &out_shape);
    ScsaDetails { q, k, v, attn, output }
}

/// Weighted residual shortcut with stochastic depth.
#[derive(Debug, Clone)]
pub struct WrsParams<T: Scalar> {
    pub alpha: Tensor<T>,
    pub droppath_prob: f64,
}

impl<T: Scalar> WrsParams<T> {
    pub fn init(dim: usize, droppath_prob: f64) -> Self {
        assert!(
            (0.0..1.0).contains(&droppath_prob),
            "droppath_prob must be in [0, 1), got {droppath_prob}"
        );
        WrsParams {
            alpha: Tensor::param(vec![T::from_f64(ALPHA_INIT); dim], &[dim]),
            droppath_prob,
        }
    }

    pub fn named_params(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>) {
        out.push((format!("{prefix}.alpha"), self.alpha.clone()));
    }
}

/// `x + alpha (.) f_out`, with the branch dropped (and otherwise rescaled
/// by 1/(1-p)) per call during training. With `droppath_prob == 0` the rng
/// is never consulted; eval mode never consults it either.
pub fn weighted_residual<T: Scalar>(
    tape: &Tape<T>,
    x: &Tensor<T>,
    f_out: &Tensor<T>,
    p: &WrsParams<T>,
    training: bool,
    rng: &mut Rng,
) -> Tensor<T> {
    let branch = tape.mul(f_out, &p.alpha);
    if training && p.droppath_prob > 0.0 {
        if rng.bernoulli(p.droppath_prob) {
            return x.clone();
        }
        let kept = tape.mul_scalar(&branch, T::from_f64(1.0 / (1.0 - p.droppath_prob)));
        return tape.add(x, &kept);
    }
    tape.add(x, &branch)
}

/// Two-layer MLP `D -> r*D -> D` with SiLU.
#[derive(Debug, Clone)]
pub struct MlpParams<T: Scalar> {
    pub w1: Tensor<T>,
    pub b1: Tensor<T>,
    pub w2: Tensor<T>,
    pub b2: Tensor<T>,
}

impl<T: Scalar> MlpParams<T> {
    pub fn init(dim: usize, hidden: usize, rng: &mut Rng) -> Self {
        let mat = |r: usize, c: usize, rng: &mut Rng| {
            Tensor::param(
                (0..r * c)
                    .map(|_| T::from_f64(rng.truncated_normal(WEIGHT_STD)))
                    .collect(),
                &[r, c],
            )
        };
        MlpParams {
            w1: mat(dim, hidden, rng),
            b1: Tensor::param(vec![T::ZERO; hidden], &[hidden]),
            w2: mat(hidden, dim, rng),
            b2: Tensor::param(vec![T::ZERO; dim], &[dim]),
        }
    }

    pub fn forward(&self, tape: &Tape<T>, x: &Tensor<T>) -> Tensor<T> {
        let h = tape.add(&tape.matmul(x, &self.w1), &self.b1);
        let h = tape.silu(&h);
        tape.add(&tape.matmul(&h, &self.w2), &self.b2)
    }

    pub fn named_params(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>) {
        out.push((format!("{prefix}.w1"), self.w1.clone()));
        out.push((format!("{prefix}.b1"), self.b1.clone()));
        out.push((format!("{prefix}.w2"), self.w2.clone()));
        out.push((format!("{prefix}.b2"), self.b2.clone()));
    }
}

/// One Lipschitz transformer block: attention and MLP sub-layers, each
/// wrapped as `CenterNorm(x + DropPath(alpha (.) f(x)))`.
#[derive(Debug, Clone)]
pub struct LipschitzBlockParams<T: Scalar> {
    pub attn: ScsaParams<T>,
    pub mlp: MlpParams<T>,
    pub norm1: CenterNormParams<T>,
    pub norm2: CenterNormParams<T>,
    pub wrs1: WrsParams<T>,
    pub wrs2: WrsParams<T>,
}

impl<T: Scalar> LipschitzBlockParams<T> {
    pub fn init(
        dim: usize,
        heads: usize,
        mlp_ratio: usize,
        droppath_prob: f64,
        rng: &mut Rng,
    ) -> Self {
        LipschitzBlockParams {
            attn: ScsaParams::init(dim, heads, rng),
            mlp: MlpParams::init(dim, dim * mlp_ratio, rng),
            norm1: CenterNormParams::init(dim),
            norm2: CenterNormParams::init(dim),
            wrs1: WrsParams::init(dim, droppath_prob),
            wrs2: WrsParams::init(dim, droppath_prob),
        }
    }

    pub fn named_params(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>) {
        self.attn.named_params(&format!("{prefix}.attn"), out);
        self.mlp.named_params(&format!("{prefix}.mlp"), out);
        self.norm1.named_params(&format!("{prefix}.norm1"), out);
        self.norm2.named_params(&format!("{prefix}.norm2"), out);
        self.wrs1.named_params(&format!("{prefix}.wrs1"), out);
        self.wrs2.named_params(&format!("{prefix}.wrs2"), out);
    }
}

/// Post-norm composition, applied twice:
/// `y = CN1(WRS1(x, SCSA(x)))`, `out = CN2(WRS2(y, MLP(y)))`.
pub fn lipschitz_block<T: Scalar>(
    tape: &Tape<T>,
    x: &Tensor<T>,
    p: &LipschitzBlockParams<T>,
    training: bool,
    rng: &mut Rng,
) -> Tensor<T> {
    let attn_out = scsa(tape, x, &p.attn);
    let y = weighted_residual(tape, x, &attn_out, &p.wrs1, training, rng);
    let y = center_norm(tape, &y, &p.norm1);
    let mlp_out = p.mlp.forward(tape, &y);
    let z = weighted_residual(tape, &y, &mlp_out, &p.wrs2, training, rng);
    center_norm(tape, &z, &p.norm2)
}

//! Standard transformer block kept as the ablation counterpart: LayerNorm
//! (variance normalization), dot-product attention with 1/sqrt(d) scaling,
//! and plain residuals. It mirrors the Lipschitz block's structure so the
//! stability experiment compares mechanisms, not architectures.

use crate::lipschitz::{MlpParams, WEIGHT_STD};
use crate::rng::Rng;
use crate::tensor::{Scalar, Tape, Tensor};

const LAYER_NORM_EPS: f64 = 1e-5;

/// LayerNorm with learnable affine.
#[derive(Debug, Clone)]
pub struct LayerNormParams<T: Scalar> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
}

impl<T: Scalar> LayerNormParams<T> {
    pub fn init(dim: usize) -> Self {
        LayerNormParams {
            gamma: Tensor::param(vec![T::ONE; dim], &[dim]),
            beta: Tensor::param(vec![T::ZERO; dim], &[dim]),
        }
    }

    pub fn named_params(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>) {
        out.push((format!("{prefix}.gamma"), self.gamma.clone()));
        out.push((format!("{prefix}.beta"), self.beta.clone()));
    }
}

/// `gamma * (x - mean) / sqrt(var + eps) + beta` per last-axis slice.
pub fn layer_norm<T: Scalar>(tape: &Tape<T>, x: &Tensor<T>, p: &LayerNormParams<T>) -> Tensor<T> {
    let mean = tape.mean_last_keepdim(x);
    let centered = tape.sub(x, &mean);
    let var = tape.mean_last_keepdim(&tape.mul(&centered, &centered));
    let denom = tape.sqrt(&tape.add_scalar(&var, T::from_f64(LAYER_NORM_EPS)));
    let normed = tape.div(&centered, &denom);
    tape.add(&tape.mul(&normed, &p.gamma), &p.beta)
}

/// Unnormalized multi-head dot-product attention.
#[derive(Debug, Clone)]
pub struct DotAttentionParams<T: Scalar> {
    pub wq: Tensor<T>,
    pub wk: Tensor<T>,
    pub wv: Tensor<T>,
    pub heads: usize,
}

impl<T: Scalar> DotAttentionParams<T> {
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
        DotAttentionParams {
            wq: proj(rng),
            wk: proj(rng),
            wv: proj(rng),
            heads,
        }
    }

    pub fn named_params(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>) {
        out.push((format!("{prefix}.wq"), self.wq.clone()));
        out.push((format!("{prefix}.wk"), self.wk.clone()));
        out.push((format!("{prefix}.wv"), self.wv.clone()));
    }
}

/// `softmax(Q K^T / sqrt(dh)) V` per head, heads concatenated.
pub fn dot_attention<T: Scalar>(
    tape: &Tape<T>,
    x: &Tensor<T>,
    p: &DotAttentionParams<T>,
) -> Tensor<T> {
    let rank = x.rank();
    assert!(rank >= 2, "dot_attention expects [..., N, D]");
    let d = x.shape()[rank - 1];
    let heads = p.heads;
    let dh = d / heads;

    let split = |w: &Tensor<T>| -> Tensor<T> {
        let proj = tape.matmul(x, w);
        let mut shape = proj.shape().to_vec();
        shape.pop();
        shape.push(heads);
        shape.push(dh);
        let r = tape.reshape(&proj, &shape);
        tape.swap_axes(&r, shape.len() - 3, shape.len() - 2)
    };
    let q = split(&p.wq);
    let k = split(&p.wk);
    let v = split(&p.wv);

    let scale = T::from_f64(1.0 / (dh as f64).sqrt());
    let scores = tape.mul_scalar(&tape.matmul(&q, &tape.transpose(&k)), scale);
    let attn = tape.softmax_last(&scores);
    let per_head = tape.matmul(&attn, &v);

    let r = per_head.rank();
    let merged = tape.swap_axes(&per_head, r - 3, r - 2);
    tape.reshape(&merged, x.shape())
}

/// Post-norm standard block: `y = LN1(x + Attn(x))`, `out = LN2(y + MLP(y))`.
#[derive(Debug, Clone)]
pub struct BaselineBlockParams<T: Scalar> {
    pub attn: DotAttentionParams<T>,
    pub mlp: MlpParams<T>,
    pub norm1: LayerNormParams<T>,
    pub norm2: LayerNormParams<T>,
}

impl<T: Scalar> BaselineBlockParams<T> {
    pub fn init(dim: usize, heads: usize, mlp_ratio: usize, rng: &mut Rng) -> Self {
        BaselineBlockParams {
            attn: DotAttentionParams::init(dim, heads, rng),
            mlp: MlpParams::init(dim, dim * mlp_ratio, rng),
            norm1: LayerNormParams::init(dim),
            norm2: LayerNormParams::init(dim),
        }
    }

    pub fn named_params(&self, prefix: &str, out: &mut Vec<(String, Tensor<T>)>) {
        self.attn.named_params(&format!("{prefix}.attn"), out);
        self.mlp.named_params(&format!("{prefix}.mlp"), out);
        self.norm1.named_params(&format!("{prefix}.norm1"), out);
        self.norm2.named_params(&format!("{prefix}.norm2"), out);
    }
}

pub fn baseline_block<T: Scalar>(
    tape: &Tape<T>,
    x: &Tensor<T>,
    p: &BaselineBlockParams<T>,
) -> Tensor<T> {
    let attn_out = dot_attention(tape, x, &p.attn);
    let y = layer_norm(tape, &tape.add(x, &attn_out), &p.norm1);
    let mlp_out = p.mlp.forward(tape, &y);
    layer_norm(tape, &tape.add(&y, &mlp_out), &p.norm2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_norm_standardizes_rows() {
        let tape = Tape::inference();
        let p = LayerNormParams::<f64>::init(4);
        let x = Tensor::new(vec![1.0, 2.0, 3.0, 4.0], &[1, 4]);
        let y = layer_norm(&tape, &x, &p).to_vec();
        let mean: f64 = y.iter().sum::<f64>() / 4.0;
        let var: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-4);
    }

    #[test]
    fn dot_attention_output_unbounded_on_huge_inputs() {
        // the contrast with scsa: scale the input and the output scales too
        let tape = Tape::inference();
        let mut rng = Rng::new(1);
        let p = DotAttentionParams::<f64>::init(8, 4, &mut rng);
        let x = Tensor::randn(&[5, 8], 1e6, &mut rng);
        let y = dot_attention(&tape, &x, &p);
        let max_norm = y
            .to_vec()
            .chunks(8)
            .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0f64, f64::max);
        assert!(max_norm > 10.0, "expected large output rows, got {max_norm}");
    }

    #[test]
    fn baseline_block_preserves_shape() {
        let tape = Tape::inference();
        let mut rng = Rng::new(2);
        let p = BaselineBlockParams::<f64>::init(8, 4, 2, &mut rng);
        let x = Tensor::randn(&[6, 8], 1.0, &mut rng);
        assert_eq!(baseline_block(&tape, &x, &p).shape(), &[6, 8]);
    }
}

//! Named finite-difference gradient suites, shared by the `gradcheck` CLI
//! subcommand and the acceptance tests.
//!
//! Every check pins f64, step 1e-5, and a weighted-sum loss over the op
//! output (plain sums let sign errors cancel). Tolerances grow with
//! composition depth: 1e-5 for primitive ops, 1e-4 for single blocks,
//! 1e-3 end to end.

use super::{compare_grads, relative_error, GradCheckReport};
use crate::baseline::{baseline_block, BaselineBlockParams};
use crate::error::{Error, Result};
use crate::lipschitz::{
    center_norm, lipschitz_block, scsa, weighted_residual, CenterNormParams,
    LipschitzBlockParams, ScsaParams, WrsParams,
};
use crate::mobilevit::{
    fast_block, fold, inverted_residual, unfold, FastBlockConfig, FastBlockParams,
    InvertedResidualParams,
};
use crate::model::{build, ModelConfig};
use crate::rng::Rng;
use crate::tensor::{Tape, Tensor};

pub const STEP: f64 = 1e-5;
pub const TOL_PRIMITIVE: f64 = 1e-5;
pub const TOL_BLOCK: f64 = 1e-4;
pub const TOL_END_TO_END: f64 = 1e-3;

pub fn available() -> &'static [&'static str] {
    &["tensor-autodiff", "lipschitz-blocks", "mobilevit-blocks", "model"]
}

/// Run one module's suite across `seeds` random seeds.
pub fn run(module: &str, seeds: u64) -> Result<Vec<GradCheckReport>> {
    let mut reports = Vec::new();
    for seed in 0..seeds {
        match module {
            "tensor-autodiff" => tensor_suite(seed, &mut reports)?,
            "lipschitz-blocks" => lipschitz_suite(seed, &mut reports)?,
            "mobilevit-blocks" => mobilevit_suite(seed, &mut reports)?,
            "model" => model_suite(seed, &mut reports)?,
            other => {
                return Err(Error::Usage(format!(
                    "unknown gradcheck module `{other}`; available: {:?}",
                    available()
                )))
            }
        }
    }
    Ok(reports)
}

/// Run every module.
pub fn run_all(seeds: u64) -> Result<Vec<GradCheckReport>> {
    let mut reports = Vec::new();
    for module in available() {
        reports.extend(run(module, seeds)?);
    }
    Ok(reports)
}

fn uniform_tensor(shape: &[usize], lo: f64, hi: f64, rng: &mut Rng) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.uniform_in(lo, hi))
}

/// Values bounded away from zero, for kinked activations.
fn off_kink_tensor(shape: &[usize], rng: &mut Rng) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| {
        let v = rng.uniform_in(0.05, 2.0);
        if rng.bernoulli(0.5) {
            v
        } else {
            -v
        }
    })
}

/// Weighted-sum reduction with weights fixed by the seed.
fn wsum(tape: &Tape<f64>, t: &Tensor<f64>, seed: u64) -> Tensor<f64> {
    let mut rng = Rng::new(seed ^ 0x77e1_6b75);
    let w = Tensor::from_fn(t.shape(), |_| rng.uniform_in(-1.0, 1.0));
    tape.sum_all(&tape.mul(t, &w))
}

/// Gradient-check `loss(tape, x)` at `x0` w.r.t. x, against central
/// finite differences.
fn check(
    name: impl Into<String>,
    x0: &Tensor<f64>,
    tol: f64,
    loss: impl Fn(&Tape<f64>, &Tensor<f64>) -> Tensor<f64>,
) -> Result<GradCheckReport> {
    let x = Tensor::param(x0.to_vec(), x0.shape());
    let tape = Tape::new();
    let l = loss(&tape, &x);
    tape.backward(&l)?;
    let analytic = x.grad();
    compare_grads(
        name,
        &analytic,
        |cand| {
            let t = Tape::inference();
            loss(&t, cand).item()
        },
        x0,
        STEP,
        tol,
    )
}

fn tensor_suite(seed: u64, out: &mut Vec<GradCheckReport>) -> Result<()> {
    let mut rng = Rng::new(seed.wrapping_mul(0x9e37).wrapping_add(1));
    let tag = |name: &str| format!("{name} (seed {seed})");

    let a0 = uniform_tensor(&[2, 3], -2.0, 2.0, &mut rng);
    let b0 = uniform_tensor(&[3], 0.5, 2.0, &mut rng); // broadcast operand, nonzero for div
    let b_full = uniform_tensor(&[2, 3], 0.5, 2.0, &mut rng);

    for (name, which) in [("add/lhs", 0usize), ("sub/lhs", 1), ("mul/lhs", 2), ("div/lhs", 3)] {
        let b = b0.clone();
        out.push(check(tag(name), &a0, TOL_PRIMITIVE, move |t, x| {
            let y = match which {
                0 => t.add(x, &b),
                1 => t.sub(x, &b),
                2 => t.mul(x, &b),
                _ => t.div(x, &b),
            };
            wsum(t, &y, seed)
        })?);
    }
    {
        let a = a0.clone();
        out.push(check(tag("mul/rhs-broadcast"), &b0, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.mul(&a, x), seed)
        })?);
        let a = a0.clone();
        out.push(check(tag("div/rhs-broadcast"), &b0, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.div(&a, x), seed)
        })?);
        let a = a0.clone();
        out.push(check(tag("add/rhs-same-shape"), &b_full, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.add(&a, x), seed)
        })?);
    }

    out.push(check(tag("add_scalar"), &a0, TOL_PRIMITIVE, move |t, x| {
        wsum(t, &t.add_scalar(x, 1.37), seed)
    })?);
    out.push(check(tag("scale"), &a0, TOL_PRIMITIVE, move |t, x| {
        wsum(t, &t.mul_scalar(x, -2.4), seed)
    })?);
    out.push(check(tag("exp"), &a0, TOL_PRIMITIVE, move |t, x| {
        wsum(t, &t.exp(x), seed)
    })?);
    {
        let pos = uniform_tensor(&[2, 3], 0.1, 3.0, &mut rng);
        out.push(check(tag("sqrt_eps"), &pos, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.sqrt(&t.add_scalar(x, 1e-6)), seed)
        })?);
    }
    {
        let knot_free = off_kink_tensor(&[3, 4], &mut rng);
        out.push(check(tag("relu"), &knot_free, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.relu(x), seed)
        })?);
    }
    out.push(check(tag("silu"), &a0, TOL_PRIMITIVE, move |t, x| {
        wsum(t, &t.silu(x), seed)
    })?);
    out.push(check(tag("sigmoid"), &a0, TOL_PRIMITIVE, move |t, x| {
        wsum(t, &t.sigmoid(x), seed)
    })?);
    out.push(check(tag("softmax"), &a0, TOL_PRIMITIVE, move |t, x| {
        wsum(t, &t.softmax_last(x), seed)
    })?);
    out.push(check(tag("mean_all"), &a0, TOL_PRIMITIVE, move |t, x| {
        t.mean_all(x)
    })?);
    out.push(check(tag("sum_last_keepdim"), &a0, TOL_PRIMITIVE, move |t, x| {
        wsum(t, &t.sum_last_keepdim(x), seed)
    })?);
    out.push(check(tag("mean_last_keepdim"), &a0, TOL_PRIMITIVE, move |t, x| {
        wsum(t, &t.mean_last_keepdim(x), seed)
    })?);

    // matmul, plain and batched, both operands
    {
        let m0 = uniform_tensor(&[3, 4], -2.0, 2.0, &mut rng);
        let n0 = uniform_tensor(&[4, 2], -2.0, 2.0, &mut rng);
        let n = n0.clone();
        out.push(check(tag("matmul/lhs"), &m0, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.matmul(x, &n), seed)
        })?);
        let m = m0.clone();
        out.push(check(tag("matmul/rhs"), &n0, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.matmul(&m, x), seed)
        })?);
        let bm0 = uniform_tensor(&[2, 3, 4], -2.0, 2.0, &mut rng);
        let n = n0.clone();
        out.push(check(tag("matmul/batched-lhs"), &bm0, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.matmul(x, &n), seed)
        })?);
        let bm = bm0.clone();
        out.push(check(tag("matmul/shared-rhs"), &n0, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.matmul(&bm, x), seed)
        })?);
    }

    // conv2d via im2col + matmul, all three operands
    {
        let x0 = uniform_tensor(&[5, 5, 2], -2.0, 2.0, &mut rng);
        let w0 = uniform_tensor(&[3, 3, 2, 3], -1.0, 1.0, &mut rng);
        let w = w0.clone();
        out.push(check(tag("conv2d/input"), &x0, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.conv2d(x, &w, None, 1, 1), seed)
        })?);
        let xf = x0.clone();
        out.push(check(tag("conv2d/weights"), &w0, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.conv2d(&xf, x, None, 2, 1), seed)
        })?);
        let bias0 = uniform_tensor(&[3], -1.0, 1.0, &mut rng);
        let (xf, w) = (x0.clone(), w0.clone());
        out.push(check(tag("conv2d/bias"), &bias0, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.conv2d(&xf, &w, Some(x), 1, 0), seed)
        })?);
    }

    // depthwise conv, both operands
    {
        let x0 = uniform_tensor(&[5, 4, 3], -2.0, 2.0, &mut rng);
        let w0 = uniform_tensor(&[3, 3, 3], -1.0, 1.0, &mut rng);
        let w = w0.clone();
        out.push(check(tag("depthwise/input"), &x0, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.depthwise_conv2d(x, &w, None, 1, 1), seed)
        })?);
        let xf = x0.clone();
        out.push(check(tag("depthwise/weights"), &w0, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.depthwise_conv2d(&xf, x, None, 2, 1), seed)
        })?);
    }

    // shape ops: rearrangements composed into one differentiable chain
    {
        let x0 = uniform_tensor(&[2, 3, 4], -2.0, 2.0, &mut rng);
        out.push(check(tag("reshape+swap_axes"), &x0, TOL_PRIMITIVE, move |t, x| {
            let y = t.swap_axes(&t.reshape(x, &[6, 4]), 0, 1);
            wsum(t, &y, seed)
        })?);
        let s0 = uniform_tensor(&[3, 4, 2], -2.0, 2.0, &mut rng);
        out.push(check(tag("pad+crop"), &s0, TOL_PRIMITIVE, move |t, x| {
            let y = t.crop_hw(&t.pad_hw(x, 5, 6), 3, 4);
            wsum(t, &y, seed)
        })?);
        let g0 = uniform_tensor(&[4, 3, 2], -2.0, 2.0, &mut rng);
        out.push(check(tag("gap"), &g0, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.global_average_pool(x), seed)
        })?);
        let c0 = uniform_tensor(&[3, 2], -2.0, 2.0, &mut rng);
        let other = uniform_tensor(&[3, 3], -2.0, 2.0, &mut rng);
        out.push(check(tag("concat_last/lhs"), &c0, TOL_PRIMITIVE, move |t, x| {
            wsum(t, &t.concat_last(x, &other), seed)
        })?);
        let st0 = uniform_tensor(&[4, 3], -2.0, 2.0, &mut rng);
        out.push(check(tag("select+stack"), &st0, TOL_PRIMITIVE, move |t, x| {
            let rows: Vec<Tensor<f64>> = (0..4).map(|i| t.select(x, i)).collect();
            wsum(t, &t.stack(&rows), seed)
        })?);
    }

    // losses are scalar already
    {
        let z0 = uniform_tensor(&[4, 2], -3.0, 3.0, &mut rng);
        let targets = Tensor::from_fn(&[4, 2], |_| f64::from(rng.bernoulli(0.5)));
        out.push(check(tag("bce_with_logits"), &z0, TOL_PRIMITIVE, move |t, x| {
            t.bce_with_logits(x, &targets)
        })?);
        let z1 = uniform_tensor(&[4, 3], -3.0, 3.0, &mut rng);
        let labels: Vec<usize> = (0..4).map(|_| rng.below(3)).collect();
        out.push(check(tag("cross_entropy"), &z1, TOL_PRIMITIVE, move |t, x| {
            t.cross_entropy(x, &labels)
        })?);
    }

    // composed chain through the tape: centering normalization after a
    // projection, still at primitive tolerance
    {
        let x0 = uniform_tensor(&[3, 4], -2.0, 2.0, &mut rng);
        let w = uniform_tensor(&[4, 4], -1.0, 1.0, &mut rng);
        let norm = CenterNormParams::<f64>::init(4);
        out.push(check(tag("center_norm.matmul chain"), &x0, TOL_PRIMITIVE, move |t, x| {
            let projected = t.matmul(x, &w);
            wsum(t, &center_norm(t, &projected, &norm), seed)
        })?);
    }

    Ok(())
}

fn lipschitz_suite(seed: u64, out: &mut Vec<GradCheckReport>) -> Result<()> {
    let mut rng = Rng::new(seed.wrapping_mul(0x11b5).wrapping_add(3));
    let tag = |name: &str| format!("{name} (seed {seed})");
    let dim = 8;
    let n = 4;

    // CenterNorm: input, gamma, beta
    {
        let p = CenterNormParams::<f64>::init(dim);
        p.gamma.update_data(|g| {
            for v in g.iter_mut() {
                *v = rng.uniform_in(0.5, 2.0);
            }
        });
        let x0 = uniform_tensor(&[n, dim], -3.0, 3.0, &mut rng);
        let pc = p.clone();
        out.push(check(tag("center_norm/input"), &x0, TOL_BLOCK, move |t, x| {
            wsum(t, &center_norm(t, x, &pc), seed)
        })?);
        let (xf, pc) = (x0.clone(), p.clone());
        out.push(check(tag("center_norm/gamma"), &p.gamma, TOL_BLOCK, move |t, g| {
            let params = CenterNormParams {
                gamma: g.clone(),
                beta: pc.beta.clone(),
            };
            wsum(t, &center_norm(t, &xf, &params), seed)
        })?);
        let (xf, pc) = (x0.clone(), p.clone());
        out.push(check(tag("center_norm/beta"), &p.beta, TOL_BLOCK, move |t, b| {
            let params = CenterNormParams {
                gamma: pc.gamma.clone(),
                beta: b.clone(),
            };
            wsum(t, &center_norm(t, &xf, &params), seed)
        })?);
    }

    // SCSA: input, projections, temperature
    {
        let p = ScsaParams::<f64>::init(dim, 2, &mut rng);
        let x0 = uniform_tensor(&[n, dim], -2.0, 2.0, &mut rng);
        let pc = p.clone();
        out.push(check(tag("scsa/input"), &x0, TOL_BLOCK, move |t, x| {
            wsum(t, &scsa(t, x, &pc), seed)
        })?);
        let swap = |p: &ScsaParams<f64>, slot: usize, w: &Tensor<f64>| -> ScsaParams<f64> {
            let mut params = p.clone();
            match slot {
                0 => params.wq = w.clone(),
                1 => params.wv = w.clone(),
                _ => params.log_tau = w.clone(),
            }
            params
        };
        for (name, slot, target) in [
            ("scsa/wq", 0usize, p.wq.clone()),
            ("scsa/wv", 1, p.wv.clone()),
            ("scsa/log_tau", 2, p.log_tau.clone()),
        ] {
            let (xf, pc) = (x0.clone(), p.clone());
            out.push(check(tag(name), &target, TOL_BLOCK, move |t, w| {
                wsum(t, &scsa(t, &xf, &swap(&pc, slot, w)), seed)
            })?);
        }
    }

    // WRS (eval mode): input, branch, alpha
    {
        let p = WrsParams::<f64>::init(dim, 0.0);
        let x0 = uniform_tensor(&[n, dim], -2.0, 2.0, &mut rng);
        let f0 = uniform_tensor(&[n, dim], -2.0, 2.0, &mut rng);
        let (ff, pc) = (f0.clone(), p.clone());
        out.push(check(tag("wrs/input"), &x0, TOL_BLOCK, move |t, x| {
            let mut r = Rng::new(0);
            wsum(t, &weighted_residual(t, x, &ff, &pc, false, &mut r), seed)
        })?);
        let (xf, pc) = (x0.clone(), p.clone());
        out.push(check(tag("wrs/branch"), &f0, TOL_BLOCK, move |t, f| {
            let mut r = Rng::new(0);
            wsum(t, &weighted_residual(t, &xf, f, &pc, false, &mut r), seed)
        })?);
        let (xf, ff) = (x0.clone(), f0.clone());
        out.push(check(tag("wrs/alpha"), &p.alpha, TOL_BLOCK, move |t, a| {
            let params = WrsParams {
                alpha: a.clone(),
                droppath_prob: 0.0,
            };
            let mut r = Rng::new(0);
            wsum(t, &weighted_residual(t, &xf, &ff, &params, false, &mut r), seed)
        })?);
    }

    // full Lipschitz block (eval): input and an MLP weight
    {
        let p = LipschitzBlockParams::<f64>::init(dim, 2, 2, 0.0, &mut rng);
        let x0 = uniform_tensor(&[n, dim], -2.0, 2.0, &mut rng);
        let pc = p.clone();
        out.push(check(tag("lipschitz_block/input"), &x0, TOL_BLOCK, move |t, x| {
            let mut r = Rng::new(0);
            wsum(t, &lipschitz_block(t, x, &pc, false, &mut r), seed)
        })?);
        let (xf, pc) = (x0.clone(), p.clone());
        out.push(check(tag("lipschitz_block/mlp_w1"), &p.mlp.w1, TOL_BLOCK, move |t, w| {
            let mut params = pc.clone();
            params.mlp.w1 = w.clone();
            let mut r = Rng::new(0);
            wsum(t, &lipschitz_block(t, &xf, &params, false, &mut r), seed)
        })?);
    }

    // baseline block, used by the ablation, deserves the same scrutiny
    {
        let p = BaselineBlockParams::<f64>::init(dim, 2, 2, &mut rng);
        let x0 = uniform_tensor(&[n, dim], -2.0, 2.0, &mut rng);
        out.push(check(tag("baseline_block/input"), &x0, TOL_BLOCK, move |t, x| {
            wsum(t, &baseline_block(t, x, &p), seed)
        })?);
    }

    Ok(())
}

fn mobilevit_suite(seed: u64, out: &mut Vec<GradCheckReport>) -> Result<()> {
    let mut rng = Rng::new(seed.wrapping_mul(0x3141).wrapping_add(7));
    let tag = |name: &str| format!("{name} (seed {seed})");

    // inverted residual: input and two weight groups
    {
        let p = InvertedResidualParams::<f64>::init(3, 3, 1, 2, &mut rng);
        let x0 = uniform_tensor(&[4, 4, 3], -2.0, 2.0, &mut rng);
        let pc = p.clone();
        out.push(check(tag("inverted_residual/input"), &x0, TOL_BLOCK, move |t, x| {
            wsum(t, &inverted_residual(t, x, &pc), seed)
        })?);
        let (xf, pc) = (x0.clone(), p.clone());
        out.push(check(
            tag("inverted_residual/expand_w"),
            &p.expand_w,
            TOL_BLOCK,
            move |t, w| {
                let mut params = pc.clone();
                params.expand_w = w.clone();
                wsum(t, &inverted_residual(t, &xf, &params), seed)
            },
        )?);
        let (xf, pc) = (x0.clone(), p.clone());
        out.push(check(
            tag("inverted_residual/depthwise_w"),
            &p.depthwise_w,
            TOL_BLOCK,
            move |t, w| {
                let mut params = pc.clone();
                params.depthwise_w = w.clone();
                wsum(t, &inverted_residual(t, &xf, &params), seed)
            },
        )?);
    }

    // unfold / pointwise transform / fold chain
    {
        let x0 = uniform_tensor(&[4, 6, 3], -2.0, 2.0, &mut rng);
        out.push(check(tag("unfold+fold"), &x0, TOL_PRIMITIVE, move |t, x| {
            let u = unfold(t, x, (2, 2));
            let scaled = t.mul_scalar(&u, 1.5);
            wsum(t, &fold(t, &scaled, (2, 2), (4, 6)), seed)
        })?);
    }

    // hybrid block: input and local conv weights
    {
        let cfg = FastBlockConfig {
            channels: 3,
            dim: 4,
            depth: 1,
            heads: 2,
            mlp_ratio: 2,
            patch: (2, 2),
            droppath: vec![0.0],
            variant: crate::mobilevit::BlockVariant::Lipschitz,
        };
        let p = FastBlockParams::<f64>::init(&cfg, &mut rng);
        let x0 = uniform_tensor(&[4, 4, 3], -1.0, 1.0, &mut rng);
        let pc = p.clone();
        out.push(check(tag("fast_block/input"), &x0, TOL_BLOCK, move |t, x| {
            let mut r = Rng::new(0);
            wsum(t, &fast_block(t, x, &pc, false, &mut r), seed)
        })?);
        let (xf, pc) = (x0.clone(), p.clone());
        out.push(check(
            tag("fast_block/local3x3_w"),
            &p.local3x3_w,
            TOL_BLOCK,
            move |t, w| {
                let mut params = pc.clone();
                params.local3x3_w = w.clone();
                let mut r = Rng::new(0);
                wsum(t, &fast_block(t, &xf, &params, false, &mut r), seed)
            },
        )?);
    }

    Ok(())
}

/// End-to-end: mean logit of the tiny model w.r.t. a subset of input
/// coordinates (full-input central differences would dominate the whole
/// suite's runtime without adding information).
fn model_suite(seed: u64, out: &mut Vec<GradCheckReport>) -> Result<()> {
    let cfg = ModelConfig::tiny(2);
    let model = build::<f64>(&cfg, 1234)?;
    let mut rng = Rng::new(seed.wrapping_mul(0xabcd).wrapping_add(11));
    let (h, w) = cfg.image_size;
    let x0 = uniform_tensor(&[h, w, 1], -1.5, 1.5, &mut rng);

    // analytic gradient of the mean logit w.r.t. the input
    let x = Tensor::param(x0.to_vec(), x0.shape());
    let tape = Tape::new();
    let mut fwd_rng = Rng::new(0);
    let logits = model.forward_single(&tape, &x, false, &mut fwd_rng)?;
    let loss = tape.mean_all(&logits);
    tape.backward(&loss)?;
    let analytic = x.grad();

    // central differences on a seed-determined coordinate subset
    let coords: Vec<usize> = (0..40).map(|_| rng.below(h * w)).collect();
    let eval = |data: &[f64]| -> f64 {
        let t = Tape::inference();
        let xt = Tensor::new(data.to_vec(), &[h, w, 1]);
        let mut r = Rng::new(0);
        let l = model.forward_single(&t, &xt, false, &mut r).unwrap();
        t.mean_all(&l).item()
    };
    let base = x0.to_vec();
    let mut max_rel_error = 0.0f64;
    let mut failing_index = None;
    for &i in &coords {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[i] += STEP;
        minus[i] -= STEP;
        let numeric = (eval(&plus) - eval(&minus)) / (2.0 * STEP);
        let rel = relative_error(numeric, analytic[i]);
        if rel > max_rel_error {
            max_rel_error = rel;
            failing_index = Some(i);
        }
    }
    out.push(GradCheckReport {
        op: format!("model/mean-logit-vs-input[{} coords] (seed {seed})", coords.len()),
        max_rel_error,
        failing_index: if max_rel_error > TOL_END_TO_END {
            failing_index
        } else {
            None
        },
        tolerance: TOL_END_TO_END,
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_module_is_usage_error() {
        assert!(matches!(run("nope", 1), Err(Error::Usage(_))));
    }

    #[test]
    fn tensor_suite_one_seed_passes() {
        let reports = run("tensor-autodiff", 1).unwrap();
        assert!(!reports.is_empty());
        for r in &reports {
            assert!(r.pass(), "{r}");
        }
    }

    #[test]
    fn lipschitz_suite_one_seed_passes() {
        for r in run("lipschitz-blocks", 1).unwrap() {
            assert!(r.pass(), "{r}");
        }
    }

    #[test]
    fn mobilevit_suite_one_seed_passes() {
        for r in run("mobilevit-blocks", 1).unwrap() {
            assert!(r.pass(), "{r}");
        }
    }

    #[test]
    fn model_suite_one_seed_passes() {
        for r in run("model", 1).unwrap() {
            assert!(r.pass(), "{r}");
        }
    }
}

//! Independent brute-force oracles used to verify the implementation.
//!
//! Nothing in this module shares code with the paths it checks: gradients
//! come from central finite differences, convolutions from naive sliding
//! windows, spectral norms from power iteration on explicit matrices, and
//! Lipschitz constants from empirical ratio sampling.

pub mod metrics_ref;
pub mod suites;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Outcome of one gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub op: String,
    pub max_rel_error: f64,
    pub failing_index: Option<usize>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn pass(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:<40} max_rel_err {:.3e} (tol {:.0e})",
            if self.pass() { "ok  " } else { "FAIL" },
            self.op,
            self.max_rel_error,
            self.tolerance
        )?;
        if let Some(i) = self.failing_index {
            write!(f, " worst at index {i}")?;
        }
        Ok(())
    }
}

/// Central finite differences: `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_diff_grad(
    f: impl Fn(&Tensor<f64>) -> f64,
    x: &Tensor<f64>,
    step: f64,
) -> Result<Tensor<f64>> {
    let base = x.to_vec();
    let shape = x.shape().to_vec();
    let mut grad = vec![0.0; base.len()];
    for i in 0..base.len() {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[i] += step;
        minus[i] -= step;
        let fp = f(&Tensor::new(plus, &shape));
        let fm = f(&Tensor::new(minus, &shape));
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::Oracle(format!(
                "finite_diff_grad: non-finite evaluation at coordinate {i}"
            )));
        }
        grad[i] = (fp - fm) / (2.0 * step);
    }
    Ok(Tensor::new(grad, &shape))
}

/// Relative error with a floor, so near-zero gradient pairs are compared
/// absolutely at `tol * floor` instead of blowing up the ratio.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-2)
}

/// Compare an analytic gradient against `finite_diff_grad` of `f` at `x`.
pub fn compare_grads(
    op: impl Into<String>,
    analytic: &[f64],
    f: impl Fn(&Tensor<f64>) -> f64,
    x: &Tensor<f64>,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let numeric = finite_diff_grad(f, x, step)?;
    let numeric = numeric.to_vec();
    assert_eq!(numeric.len(), analytic.len(), "gradient length mismatch");
    let mut max_rel_error = 0.0;
    let mut failing_index = None;
    for (i, (&n, &a)) in numeric.iter().zip(analytic.iter()).enumerate() {
        let rel = relative_error(n, a);
        if rel > max_rel_error {
            max_rel_error = rel;
            failing_index = Some(i);
        }
    }
    Ok(GradCheckReport {
        op: op.into(),
        max_rel_error,
        failing_index: if max_rel_error > tolerance {
            failing_index
        } else {
            None
        },
        tolerance,
    })
}

/// Largest empirical ratio `|f(x) - f(y)| / |x - y|` over sampled pairs.
///
/// `sampler` must produce pairs with `|x - y| >= 1e-8`. The estimate is a
/// lower bound of the true Lipschitz constant that tightens as the pair
/// count grows and the sampler covers extreme directions.
pub fn empirical_lipschitz(
    f: impl Fn(&[f64]) -> Vec<f64>,
    mut sampler: impl FnMut() -> (Vec<f64>, Vec<f64>),
    pairs: usize,
) -> f64 {
    let mut best: f64 = 0.0;
    for _ in 0..pairs {
        let (x, y) = sampler();
        let dx = norm_of_diff(&x, &y);
        debug_assert!(dx >= 1e-8, "sampler produced a degenerate pair");
        let (fx, fy) = (f(&x), f(&y));
        let dfx = norm_of_diff(&fx, &fy);
        best = best.max(dfx / dx);
    }
    best
}

fn norm_of_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

/// Pair sampler for `empirical_lipschitz` that cycles through delta
/// families: Gaussian directions, coordinate axes, centered coordinate
/// axes (`e_i - 1/D`), coordinate differences (`e_i - e_j`) and sign
/// patterns. Axis-aligned and centered deltas are what let the estimate
/// approach the spectral norm of diagonal-times-projection maps, which
/// pure Gaussian sampling misses in high dimension.
pub struct PairSampler {
    dim: usize,
    scale: f64,
    rng: Rng,
    counter: usize,
}

impl PairSampler {
    pub fn new(dim: usize, scale: f64, seed: u64) -> Self {
        PairSampler {
            dim,
            scale,
            rng: Rng::new(seed),
            counter: 0,
        }
    }

    pub fn next_pair(&mut self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let x: Vec<f64> = (0..d).map(|_| self.rng.normal() * self.scale).collect();
        let mag = self.scale * 10f64.powf(self.rng.uniform_in(-2.0, 0.5));
        let mut delta = vec![0.0; d];
        match self.counter % 5 {
            0 => {
                for v in delta.iter_mut() {
                    *v = self.rng.normal() * mag;
                }
            }
            1 => {
                delta[self.rng.below(d)] = mag;
            }
            2 => {
                let i = self.rng.below(d);
                for v in delta.iter_mut() {
                    *v = -mag / d as f64;
                }
                delta[i] += mag;
            }
            3 => {
                let i = self.rng.below(d);
                let j = self.rng.below(d);
                delta[i] += mag;
                delta[j] -= mag;
                if i == j {
                    delta[i] = mag;
                }
            }
            _ => {
                for v in delta.iter_mut() {
                    *v = if self.rng.bernoulli(0.5) { mag } else { -mag };
                }
            }
        }
        self.counter += 1;
        if delta.iter().all(|&v| v.abs() < 1e-12) {
            delta[0] = mag.max(1e-6);
        }
        let y: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
        (x, y)
    }
}

/// Largest singular value of a dense matrix by power iteration on MᵀM.
pub fn explicit_jacobian_spectral_norm(matrix: &[f64], rows: usize, cols: usize) -> Result<f64> {
    assert_eq!(matrix.len(), rows * cols, "matrix extent mismatch");
    let mut rng = Rng::new(0x5eed);
    let mut v: Vec<f64> = (0..cols).map(|_| rng.normal()).collect();
    normalize(&mut v);
    let mut sigma = 0.0;
    for _ in 0..10_000 {
        // w = M v; u = M^T w
        let mut w = vec![0.0; rows];
        for i in 0..rows {
            for j in 0..cols {
                w[i] += matrix[i * cols + j] * v[j];
            }
        }
        let new_sigma = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut u = vec![0.0; cols];
        for i in 0..rows {
            for j in 0..cols {
                u[j] += matrix[i * cols + j] * w[i];
            }
        }
        let un = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if un < 1e-300 {
            return Ok(0.0); // v is in the null space and M^T M v = 0
        }
        for x in u.iter_mut() {
            *x /= un;
        }
        let converged = (new_sigma - sigma).abs() <= 1e-10 * new_sigma.max(1.0);
        sigma = new_sigma;
        v = u;
        if converged {
            return Ok(sigma);
        }
    }
    Err(Error::Oracle(
        "spectral norm power iteration did not converge in 10000 iterations".into(),
    ))
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    } else {
        v[0] = 1.0;
    }
}

/// Explicit CenterNorm Jacobian `diag(gamma) . D/(D-1) . (I - 11^T/D)`,
/// built directly from the formula (independent of the implementation).
pub fn center_norm_jacobian(gamma: &[f64]) -> Vec<f64> {
    let d = gamma.len();
    assert!(d >= 2, "center_norm_jacobian needs D >= 2");
    let factor = d as f64 / (d as f64 - 1.0);
    let mut jac = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let proj = if i == j { 1.0 - 1.0 / d as f64 } else { -1.0 / d as f64 };
            jac[i * d + j] = gamma[i] * factor * proj;
        }
    }
    jac
}

/// Naive sliding-window cross-correlation, quadruple loops, no reuse of
/// the im2col path.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_naive(
    x: &[f64],
    h: usize,
    w: usize,
    cin: usize,
    weights: &[f64],
    kh: usize,
    kw: usize,
    cout: usize,
    stride: usize,
    padding: usize,
) -> Vec<f64> {
    let oh = (h + 2 * padding - kh) / stride + 1;
    let ow = (w + 2 * padding - kw) / stride + 1;
    let mut out = vec![0.0; oh * ow * cout];
    for oi in 0..oh {
        for oj in 0..ow {
            for co in 0..cout {
                let mut acc = 0.0;
                for ki in 0..kh {
                    for kj in 0..kw {
                        let ii = (oi * stride + ki) as i64 - padding as i64;
                        let jj = (oj * stride + kj) as i64 - padding as i64;
                        if ii < 0 || ii >= h as i64 || jj < 0 || jj >= w as i64 {
                            continue;
                        }
                        for ci in 0..cin {
                            let xv = x[((ii as usize) * w + jj as usize) * cin + ci];
                            let wv = weights[((ki * kw + kj) * cin + ci) * cout + co];
                            acc += xv * wv;
                        }
                    }
                }
                out[(oi * ow + oj) * cout + co] = acc;
            }
        }
    }
    out
}

/// Naive depthwise cross-correlation.
#[allow(clippy::too_many_arguments)]
pub fn depthwise_conv2d_naive(
    x: &[f64],
    h: usize,
    w: usize,
    c: usize,
    weights: &[f64],
    kh: usize,
    kw: usize,
    stride: usize,
    padding: usize,
) -> Vec<f64> {
    let oh = (h + 2 * padding - kh) / stride + 1;
    let ow = (w + 2 * padding - kw) / stride + 1;
    let mut out = vec![0.0; oh * ow * c];
    for oi in 0..oh {
        for oj in 0..ow {
            for ch in 0..c {
                let mut acc = 0.0;
                for ki in 0..kh {
                    for kj in 0..kw {
                        let ii = (oi * stride + ki) as i64 - padding as i64;
                        let jj = (oj * stride + kj) as i64 - padding as i64;
                        if ii < 0 || ii >= h as i64 || jj < 0 || jj >= w as i64 {
                            continue;
                        }
                        acc += x[((ii as usize) * w + jj as usize) * c + ch]
                            * weights[(ki * kw + kj) * c + ch];
                    }
                }
                out[(oi * ow + oj) * c + ch] = acc;
            }
        }
    }
    out
}

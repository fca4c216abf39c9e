//! Softmax and the two classification losses, all computed in log space.

use super::{Scalar, Tape, Tensor};

impl<T: Scalar> Tape<T> {
    /// Softmax along the last axis, with max subtraction for overflow safety.
    pub fn softmax_last(&self, x: &Tensor<T>) -> Tensor<T> {
        let d = *x.shape().last().expect("softmax_last needs rank >= 1");
        assert!(d >= 1, "softmax_last: empty last axis");
        let rows = x.numel() / d;
        let xd = x.data();
        let mut data = vec![T::ZERO; rows * d];
        for r in 0..rows {
            let row = &xd[r * d..(r + 1) * d];
            let mut max = row[0];
            for &v in row {
                max = max.maximum(v);
            }
            let mut sum = T::ZERO;
            for j in 0..d {
                let e = (row[j] - max).exp();
                data[r * d + j] = e;
                sum += e;
            }
            for j in 0..d {
                data[r * d + j] = data[r * d + j] / sum;
            }
        }
        drop(xd);
        let y = data.clone();
        let mut out = Tensor::internal(data, x.shape().to_vec(), false);
        self.record(&mut out, &[x], move |g| {
            // gx = y * (g - sum(g * y)) per row
            let mut gx = vec![T::ZERO; rows * d];
            for r in 0..rows {
                let mut dot = T::ZERO;
                for j in 0..d {
                    dot += g[r * d + j] * y[r * d + j];
                }
                for j in 0..d {
                    gx[r * d + j] = y[r * d + j] * (g[r * d + j] - dot);
                }
            }
            vec![gx]
        });
        out
    }

    /// Mean binary cross-entropy from raw logits.
    ///
    /// `targets` carries 0/1 values of the same shape as `logits`; it is
    /// treated as a constant (no gradient flows into it). The per-element
    /// loss is `max(z, 0) - z*t + ln(1 + exp(-|z|))`, the overflow-safe
    /// form of `-t ln σ(z) - (1-t) ln(1 - σ(z))`.
    pub fn bce_with_logits(&self, logits: &Tensor<T>, targets: &Tensor<T>) -> Tensor<T> {
        assert_eq!(
            logits.shape(),
            targets.shape(),
            "bce_with_logits: logits {:?} vs targets {:?}",
            logits.shape(),
            targets.shape()
        );
        let n = logits.numel();
        assert!(n > 0, "bce_with_logits: empty batch");
        let (zd, td) = (logits.data(), targets.data());
        let mut total = T::ZERO;
        for (&z, &t) in zd.iter().zip(td.iter()) {
            debug_assert!(t == T::ZERO || t == T::ONE, "bce target not in {{0,1}}");
            total += z.maximum(T::ZERO) - z * t + (T::ONE + (-z.abs()).exp()).ln();
        }
        drop(zd);
        let inv = T::ONE / T::from_f64(n as f64);
        let mut out = Tensor::internal(vec![total * inv], vec![], false);
        let (z_rc, t_rc) = (logits.data_rc(), targets.data_rc());
        self.record(&mut out, &[logits, targets], move |g| {
            let (zd, td) = (z_rc.borrow(), t_rc.borrow());
            let gz = zd
                .iter()
                .zip(td.iter())
                .map(|(&z, &t)| {
                    let sig = T::ONE / (T::ONE + (-z).exp());
                    g[0] * (sig - t) * inv
                })
                .collect();
            vec![gz, vec![T::ZERO; n]]
        });
        out
    }

    /// Mean categorical cross-entropy from raw logits `[B, C]` against
    /// class indices. Indices must be in range (validated by callers that
    /// accept external input).
    pub fn cross_entropy(&self, logits: &Tensor<T>, labels: &[usize]) -> Tensor<T> {
        assert_eq!(logits.rank(), 2, "cross_entropy expects [B, C] logits");
        let (b, c) = (logits.shape()[0], logits.shape()[1]);
        assert_eq!(labels.len(), b, "cross_entropy: {} labels for batch {b}", labels.len());
        assert!(b > 0, "cross_entropy: empty batch");
        for &l in labels {
            assert!(l < c, "cross_entropy: label {l} out of range {c}");
        }
        let zd = logits.data();
        let mut total = T::ZERO;
        let mut probs = vec![T::ZERO; b * c];
        for (r, &label) in labels.iter().enumerate() {
            let row = &zd[r * c..(r + 1) * c];
            let mut max = row[0];
            for &v in row {
                max = max.maximum(v);
            }
            let mut sum = T::ZERO;
            for j in 0..c {
                let e = (row[j] - max).exp();
                probs[r * c + j] = e;
                sum += e;
            }
            for j in 0..c {
                probs[r * c + j] = probs[r * c + j] / sum;
            }
            total += max + sum.ln() - row[label];
        }
        drop(zd);
        let inv = T::ONE / T::from_f64(b as f64);
        let mut out = Tensor::internal(vec![total * inv], vec![], false);
        let labels = labels.to_vec();
        self.record(&mut out, &[logits], move |g| {
            let mut gz = probs.clone();
            for (r, &label) in labels.iter().enumerate() {
                gz[r * c + label] -= T::ONE;
            }
            for v in gz.iter_mut() {
                *v = *v * g[0] * inv;
            }
            vec![gz]
        });
        out
    }
}

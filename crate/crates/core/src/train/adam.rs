//! Adam with bias correction.

use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone)]
pub struct AdamState<T: Scalar> {
    first_moment: Vec<Vec<T>>,
    second_moment: Vec<Vec<T>>,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &[Tensor<T>], lr: f64) -> Self {
        AdamState {
            first_moment: params.iter().map(|p| vec![T::ZERO; p.numel()]).collect(),
            second_moment: params.iter().map(|p| vec![T::ZERO; p.numel()]).collect(),
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// One update from the gradients currently held by `params`.
    ///
    /// Returns false (and leaves parameters and moments untouched) when
    /// any gradient is non-finite; the caller records the event and
    /// training continues.
    pub fn step(&mut self, params: &[Tensor<T>]) -> bool {
        assert_eq!(params.len(), self.first_moment.len(), "optimizer/model mismatch");
        let grads: Vec<Vec<T>> = params.iter().map(|p| p.grad()).collect();
        let finite = grads
            .iter()
            .all(|g| g.iter().all(|v| v.is_finite()));
        if !finite {
            return false;
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let (b1, b2) = (T::from_f64(self.beta1), T::from_f64(self.beta2));
        let one_minus_b1 = T::from_f64(1.0 - self.beta1);
        let one_minus_b2 = T::from_f64(1.0 - self.beta2);
        let inv_bc1 = T::from_f64(1.0 / bc1);
        let inv_bc2 = T::from_f64(1.0 / bc2);
        let lr = T::from_f64(self.lr);
        let eps = T::from_f64(self.eps);
        for ((param, grad), (m, v)) in params
            .iter()
            .zip(grads.iter())
            .zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
        {
            param.update_data(|data| {
                for i in 0..data.len() {
                    let g = grad[i];
                    m[i] = b1 * m[i] + one_minus_b1 * g;
                    v[i] = b2 * v[i] + one_minus_b2 * g * g;
                    let m_hat = m[i] * inv_bc1;
                    let v_hat = v[i] * inv_bc2;
                    data[i] -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            });
        }
        true
    }
}

/// Euclidean norm over every parameter gradient.
pub fn grad_norm<T: Scalar>(params: &[Tensor<T>]) -> f64 {
    let mut acc = 0.0f64;
    for p in params {
        for g in p.grad() {
            let g = g.to_f64();
            acc += g * g;
        }
    }
    acc.sqrt()
}

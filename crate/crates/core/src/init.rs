//! Parameter initializers: Kaiming-uniform for convolutions, truncated
//! normal (std 0.02) for transformer/linear weights, zero biases.

use crate::rng::Rng;
use crate::tensor::{Scalar, Tensor};

/// Kaiming-uniform conv weights `(kh, kw, cin, cout)`: U(-b, b) with
/// `b = sqrt(6 / fan_in)`.
pub fn kaiming_conv<T: Scalar>(
    kh: usize,
    kw: usize,
    cin: usize,
    cout: usize,
    rng: &mut Rng,
) -> Tensor<T> {
    let fan_in = (kh * kw * cin) as f64;
    let bound = (6.0 / fan_in).sqrt();
    Tensor::param(
        (0..kh * kw * cin * cout)
            .map(|_| T::from_f64(rng.uniform_in(-bound, bound)))
            .collect(),
        &[kh, kw, cin, cout],
    )
}

/// Kaiming-uniform depthwise conv weights `(kh, kw, c)`, fan_in = kh*kw.
pub fn kaiming_depthwise<T: Scalar>(kh: usize, kw: usize, c: usize, rng: &mut Rng) -> Tensor<T> {
    let bound = (6.0 / (kh * kw) as f64).sqrt();
    Tensor::param(
        (0..kh * kw * c)
            .map(|_| T::from_f64(rng.uniform_in(-bound, bound)))
            .collect(),
        &[kh, kw, c],
    )
}

/// Truncated-normal linear weights `(rows, cols)`, std 0.02.
pub fn trunc_normal_linear<T: Scalar>(rows: usize, cols: usize, rng: &mut Rng) -> Tensor<T> {
    Tensor::param(
        (0..rows * cols)
            .map(|_| T::from_f64(rng.truncated_normal(0.02)))
            .collect(),
        &[rows, cols],
    )
}

pub fn zero_bias<T: Scalar>(n: usize) -> Tensor<T> {
    Tensor::param(vec![T::ZERO; n], &[n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn bias_free_conv_fragment_counts_144() {
        // 3x3x1x16 kernel: 144 parameters
        let mut rng = Rng::new(0);
        let w = kaiming_conv::<f32>(3, 3, 1, 16, &mut rng);
        assert_eq!(w.numel(), 144);
    }

    #[test]
    fn kaiming_bound_respected() {
        let mut rng = Rng::new(1);
        let w = kaiming_conv::<f64>(3, 3, 4, 8, &mut rng);
        let bound = (6.0 / (3.0 * 3.0 * 4.0)).sqrt();
        assert!(w.to_vec().iter().all(|v| v.abs() <= bound));
    }

    #[test]
    fn truncated_normal_linear_within_two_sigma() {
        let mut rng = Rng::new(2);
        let w = trunc_normal_linear::<f64>(16, 16, &mut rng);
        assert!(w.to_vec().iter().all(|v| v.abs() <= 0.04));
    }
}

//! Elementwise arithmetic, activations, and reductions.
//!
//! Binary ops broadcast numpy-style: shapes are right-aligned and an extent
//! of 1 (or a missing leading axis) repeats along the other operand.

use super::{Scalar, Tape, Tensor};

/// Broadcast result shape; panics naming both operand shapes on mismatch.
pub(crate) fn broadcast_shape(op: &str, a: &[usize], b: &[usize]) -> Vec<usize> {
    let rank = a.len().max(b.len());
    let mut out = vec![0usize; rank];
    for i in 0..rank {
        let da = if i < rank - a.len() { 1 } else { a[i - (rank - a.len())] };
        let db = if i < rank - b.len() { 1 } else { b[i - (rank - b.len())] };
        if da != db && da != 1 && db != 1 {
            panic!("{op}: shapes {a:?} and {b:?} are not broadcast-compatible");
        }
        out[i] = da.max(db);
    }
    out
}

/// Row-major strides, with stride 0 on axes the shape broadcasts along.
fn broadcast_strides(shape: &[usize], out_shape: &[usize]) -> Vec<usize> {
    let rank = out_shape.len();
    let offset = rank - shape.len();
    let mut strides = vec![0usize; rank];
    let mut acc = 1usize;
    for i in (0..shape.len()).rev() {
        strides[offset + i] = if shape[i] == 1 { 0 } else { acc };
        acc *= shape[i];
    }
    strides
}

/// Visit every output element once: `f(a_index, b_index, out_index)`.
pub(crate) fn broadcast_zip(
    a_shape: &[usize],
    b_shape: &[usize],
    out_shape: &[usize],
    mut f: impl FnMut(usize, usize, usize),
) {
    let numel: usize = out_shape.iter().product();
    if numel == 0 {
        return;
    }
    let rank = out_shape.len();
    if rank == 0 {
        f(0, 0, 0);
        return;
    }
    let sa = broadcast_strides(a_shape, out_shape);
    let sb = broadcast_strides(b_shape, out_shape);
    let mut idx = vec![0usize; rank];
    let (mut ai, mut bi) = (0usize, 0usize);
    for oi in 0..numel {
        f(ai, bi, oi);
        // odometer increment
        for d in (0..rank).rev() {
            idx[d] += 1;
            ai += sa[d];
            bi += sb[d];
            if idx[d] < out_shape[d] {
                break;
            }
            idx[d] = 0;
            ai -= sa[d] * out_shape[d];
            bi -= sb[d] * out_shape[d];
        }
    }
}

/// Sum `grad` (of `from` shape) down to `to` shape, undoing broadcast.
pub(crate) fn reduce_to_shape<T: Scalar>(grad: &[T], from: &[usize], to: &[usize]) -> Vec<T> {
    if from == to {
        return grad.to_vec();
    }
    let mut out = vec![T::ZERO; to.iter().product()];
    broadcast_zip(to, to, from, |ti, _, fi| out[ti] += grad[fi]);
    out
}

macro_rules! binary_op {
    ($name:ident, $fwd:expr, $bwd_a:expr, $bwd_b:expr) => {
        pub fn $name(&self, a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
            let out_shape = broadcast_shape(stringify!($name), a.shape(), b.shape());
            let (ad, bd) = (a.data(), b.data());
            let mut data = vec![T::ZERO; out_shape.iter().product()];
            let fwd = $fwd;
            broadcast_zip(a.shape(), b.shape(), &out_shape, |ai, bi, oi| {
                data[oi] = fwd(ad[ai], bd[bi]);
            });
            drop(ad);
            drop(bd);
            let mut out = Tensor::internal(data, out_shape.clone(), false);
            let (a_rc, b_rc) = (a.data_rc(), b.data_rc());
            let (a_shape, b_shape) = (a.shape().to_vec(), b.shape().to_vec());
            self.record(&mut out, &[a, b], move |g| {
                let (ad, bd) = (a_rc.borrow(), b_rc.borrow());
                let mut ga = vec![T::ZERO; out_shape.iter().product()];
                let mut gb = vec![T::ZERO; out_shape.iter().product()];
                let (da, db) = ($bwd_a, $bwd_b);
                broadcast_zip(&a_shape, &b_shape, &out_shape, |ai, bi, oi| {
                    ga[oi] = g[oi] * da(ad[ai], bd[bi]);
                    gb[oi] = g[oi] * db(ad[ai], bd[bi]);
                });
                vec![
                    reduce_to_shape(&ga, &out_shape, &a_shape),
                    reduce_to_shape(&gb, &out_shape, &b_shape),
                ]
            });
            out
        }
    };
}

macro_rules! unary_op {
    ($name:ident, $fwd:expr, $bwd:expr) => {
        pub fn $name(&self, x: &Tensor<T>) -> Tensor<T> {
            let fwd = $fwd;
            let data: Vec<T> = x.data().iter().map(|&v| fwd(v)).collect();
            let mut out = Tensor::internal(data, x.shape().to_vec(), false);
            let x_rc = x.data_rc();
            self.record(&mut out, &[x], move |g| {
                let xd = x_rc.borrow();
                let bwd = $bwd;
                vec![g
                    .iter()
                    .zip(xd.iter())
                    .map(|(&gi, &xi)| gi * bwd(xi))
                    .collect()]
            });
            out
        }
    };
}

impl<T: Scalar> Tape<T> {
    binary_op!(add, |a, b| a + b, |_, _| T::ONE, |_, _| T::ONE);
    binary_op!(sub, |a, b| a - b, |_, _| T::ONE, |_, _| -T::ONE);
    binary_op!(mul, |a: T, b: T| a * b, |_, b| b, |a, _| a);
    binary_op!(
        div,
        |a: T, b: T| a / b,
        |_, b: T| T::ONE / b,
        |a: T, b: T| -a / (b * b)
    );

    unary_op!(relu, |v: T| v.maximum(T::ZERO), |v: T| if v > T::ZERO {
        T::ONE
    } else {
        T::ZERO
    });
    unary_op!(exp, |v: T| v.exp(), |v: T| v.exp());
    // Precondition: strictly positive input (compose with add_scalar(eps)).
    unary_op!(sqrt, |v: T| v.sqrt(), |v: T| {
        T::from_f64(0.5) / v.sqrt()
    });

    /// x * sigmoid(x).
    pub fn silu(&self, x: &Tensor<T>) -> Tensor<T> {
        let sig = |v: T| T::ONE / (T::ONE + (-v).exp());
        let data: Vec<T> = x.data().iter().map(|&v| v * sig(v)).collect();
        let mut out = Tensor::internal(data, x.shape().to_vec(), false);
        let x_rc = x.data_rc();
        self.record(&mut out, &[x], move |g| {
            let xd = x_rc.borrow();
            vec![g
                .iter()
                .zip(xd.iter())
                .map(|(&gi, &v)| {
                    let s = sig(v);
                    gi * (s + v * s * (T::ONE - s))
                })
                .collect()]
        });
        out
    }

    /// 1 / (1 + exp(-x)).
    pub fn sigmoid(&self, x: &Tensor<T>) -> Tensor<T> {
        let sig = |v: T| T::ONE / (T::ONE + (-v).exp());
        let data: Vec<T> = x.data().iter().map(|&v| sig(v)).collect();
        let mut out = Tensor::internal(data.clone(), x.shape().to_vec(), false);
        self.record(&mut out, &[x], move |g| {
            vec![g
                .iter()
                .zip(data.iter())
                .map(|(&gi, &s)| gi * s * (T::ONE - s))
                .collect()]
        });
        out
    }

    pub fn add_scalar(&self, x: &Tensor<T>, c: T) -> Tensor<T> {
        let data: Vec<T> = x.data().iter().map(|&v| v + c).collect();
        let mut out = Tensor::internal(data, x.shape().to_vec(), false);
        self.record(&mut out, &[x], move |g| vec![g.to_vec()]);
        out
    }

    /// scale: x * c.
    pub fn mul_scalar(&self, x: &Tensor<T>, c: T) -> Tensor<T> {
        let data: Vec<T> = x.data().iter().map(|&v| v * c).collect();
        let mut out = Tensor::internal(data, x.shape().to_vec(), false);
        self.record(&mut out, &[x], move |g| {
            vec![g.iter().map(|&gi| gi * c).collect()]
        });
        out
    }

    pub fn neg(&self, x: &Tensor<T>) -> Tensor<T> {
        self.mul_scalar(x, -T::ONE)
    }

    pub fn sum_all(&self, x: &Tensor<T>) -> Tensor<T> {
        let total = x.data().iter().fold(T::ZERO, |acc, &v| acc + v);
        let n = x.numel();
        let mut out = Tensor::internal(vec![total], vec![], false);
        self.record(&mut out, &[x], move |g| vec![vec![g[0]; n]]);
        out
    }

    pub fn mean_all(&self, x: &Tensor<T>) -> Tensor<T> {
        let n = x.numel();
        assert!(n > 0, "mean_all of empty tensor");
        let total = x.data().iter().fold(T::ZERO, |acc, &v| acc + v);
        let inv = T::ONE / T::from_f64(n as f64);
        let mut out = Tensor::internal(vec![total * inv], vec![], false);
        self.record(&mut out, &[x], move |g| vec![vec![g[0] * inv; n]]);
        out
    }

    /// Sum over the last axis, keeping it as extent 1.
    pub fn sum_last_keepdim(&self, x: &Tensor<T>) -> Tensor<T> {
        assert!(x.rank() >= 1, "sum_last_keepdim needs rank >= 1");
        let d = *x.shape().last().unwrap();
        let rows = x.numel() / d.max(1);
        assert!(d >= 1, "sum_last_keepdim: empty last axis");
        let xd = x.data();
        let mut data = vec![T::ZERO; rows];
        for r in 0..rows {
            for j in 0..d {
                data[r] += xd[r * d + j];
            }
        }
        drop(xd);
        let mut shape = x.shape().to_vec();
        *shape.last_mut().unwrap() = 1;
        let mut out = Tensor::internal(data, shape, false);
        self.record(&mut out, &[x], move |g| {
            let mut gx = vec![T::ZERO; rows * d];
            for r in 0..rows {
                for j in 0..d {
                    gx[r * d + j] = g[r];
                }
            }
            vec![gx]
        });
        out
    }

    /// Mean over the last axis, keeping it as extent 1.
    pub fn mean_last_keepdim(&self, x: &Tensor<T>) -> Tensor<T> {
        let d = *x.shape().last().expect("mean_last_keepdim needs rank >= 1");
        let s = self.sum_last_keepdim(x);
        self.mul_scalar(&s, T::ONE / T::from_f64(d as f64))
    }

    /// Mean over both spatial axes of an (H, W, C) map.
    pub fn global_average_pool(&self, x: &Tensor<T>) -> Tensor<T> {
        assert_eq!(
            x.rank(),
            3,
            "global_average_pool expects (H, W, C), got {:?}",
            x.shape()
        );
        let (h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let hw = h * w;
        let xd = x.data();
        let inv = T::ONE / T::from_f64(hw as f64);
        let mut data = vec![T::ZERO; c];
        for p in 0..hw {
            for ch in 0..c {
                data[ch] += xd[p * c + ch];
            }
        }
        for v in data.iter_mut() {
            *v *= inv;
        }
        drop(xd);
        let mut out = Tensor::internal(data, vec![c], false);
        self.record(&mut out, &[x], move |g| {
            let mut gx = vec![T::ZERO; hw * c];
            for p in 0..hw {
                for ch in 0..c {
                    gx[p * c + ch] = g[ch] * inv;
                }
            }
            vec![gx]
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_of_2_4_6_is_4() {
        let t = Tape::inference();
        let x = Tensor::new(vec![2.0, 4.0, 6.0], &[3]);
        assert_eq!(t.mean_all(&x).item(), 4.0);
    }

    #[test]
    fn suffix_broadcast_bias_add() {
        let t = Tape::inference();
        let x = Tensor::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[2, 3]);
        let b = Tensor::new(vec![10.0, 20.0, 30.0], &[3]);
        let y = t.add(&x, &b);
        assert_eq!(y.to_vec(), vec![11.0, 22.0, 33.0, 14.0, 25.0, 36.0]);
    }

    #[test]
    fn last_axis_one_broadcast_divide() {
        let t = Tape::inference();
        let x = Tensor::new(vec![2.0, 4.0, 6.0, 8.0], &[2, 2]);
        let d = Tensor::new(vec![2.0, 4.0], &[2, 1]);
        let y = t.div(&x, &d);
        assert_eq!(y.to_vec(), vec![1.0, 2.0, 1.5, 2.0]);
    }

    #[test]
    #[should_panic(expected = "not broadcast-compatible")]
    fn incompatible_shapes_panic() {
        let t = Tape::<f64>::inference();
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[2, 2]);
        let _ = t.add(&a, &b);
    }

    #[test]
    fn broadcast_backward_reduces() {
        // y = x + b with b shape [3]; grad b = column sums of ones = [2,2,2]
        let t = Tape::new();
        let x = Tensor::param(vec![1.0; 6], &[2, 3]);
        let b = Tensor::param(vec![0.0; 3], &[3]);
        let y = t.add(&x, &b);
        let loss = t.sum_all(&y);
        t.backward(&loss).unwrap();
        assert_eq!(b.grad(), vec![2.0, 2.0, 2.0]);
        assert_eq!(x.grad(), vec![1.0; 6]);
    }

    #[test]
    fn quadratic_grad_is_x() {
        // loss = sum(x*x)/2 => grad = x
        let t = Tape::new();
        let x = Tensor::param(vec![1.5, -2.0, 0.5], &[3]);
        let y = t.mul(&x, &x);
        let s = t.sum_all(&y);
        let loss = t.mul_scalar(&s, 0.5);
        t.backward(&loss).unwrap();
        assert_eq!(x.grad(), vec![1.5, -2.0, 0.5]);
    }

    #[test]
    fn gap_constant_map() {
        let t = Tape::inference();
        let x = Tensor::full(&[4, 5, 3], 2.5);
        let y = t.global_average_pool(&x);
        assert_eq!(y.to_vec(), vec![2.5, 2.5, 2.5]);
    }
}

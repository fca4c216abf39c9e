//! Shape manipulation: reshape, axis swaps, padding, slicing, stacking.
//!
//! Most data movement is expressed through one primitive, `gather_map`,
//! whose single backward rule (scatter-add along the inverse map) covers
//! transposition, zero padding, cropping, im2col and patch unfold/fold.

use super::{Scalar, Tape, Tensor};
use std::rc::Rc;

impl<T: Scalar> Tape<T> {
    /// Reinterpret the buffer under a new shape (same element count).
    pub fn reshape(&self, x: &Tensor<T>, shape: &[usize]) -> Tensor<T> {
        let numel: usize = shape.iter().product();
        assert_eq!(
            numel,
            x.numel(),
            "reshape: cannot view shape {:?} as {:?}",
            x.shape(),
            shape
        );
        let mut out = Tensor::internal(x.to_vec(), shape.to_vec(), false);
        self.record(&mut out, &[x], move |g| vec![g.to_vec()]);
        out
    }

    /// Rearrangement primitive: `out[i] = map[i] < 0 ? 0 : x[map[i]]`.
    ///
    /// Every non-negative source index must appear at most once per output
    /// position set it feeds; repeats are allowed and accumulate in the
    /// backward scatter.
    pub fn gather_map(&self, x: &Tensor<T>, out_shape: &[usize], map: Rc<Vec<i64>>) -> Tensor<T> {
        let out_numel: usize = out_shape.iter().product();
        assert_eq!(
            map.len(),
            out_numel,
            "gather_map: map length {} does not match output shape {:?}",
            map.len(),
            out_shape
        );
        let xd = x.data();
        let n_in = xd.len();
        let data: Vec<T> = map
            .iter()
            .map(|&src| {
                if src < 0 {
                    T::ZERO
                } else {
                    debug_assert!((src as usize) < n_in);
                    xd[src as usize]
                }
            })
            .collect();
        drop(xd);
        let mut out = Tensor::internal(data, out_shape.to_vec(), false);
        let back_map = Rc::clone(&map);
        self.record(&mut out, &[x], move |g| {
            let mut gx = vec![T::ZERO; n_in];
            for (oi, &src) in back_map.iter().enumerate() {
                if src >= 0 {
                    gx[src as usize] += g[oi];
                }
            }
            vec![gx]
        });
        out
    }

    /// Swap two axes.
    #[allow(clippy::needless_range_loop)]
    pub fn swap_axes(&self, x: &Tensor<T>, a: usize, b: usize) -> Tensor<T> {
        let rank = x.rank();
        assert!(a < rank && b < rank, "swap_axes({a}, {b}) on rank {rank}");
        if a == b {
            return self.reshape(x, x.shape());
        }
        let mut out_shape = x.shape().to_vec();
        out_shape.swap(a, b);
        let in_strides = row_major_strides(x.shape());
        let mut map = vec![0i64; x.numel()];
        let mut idx = vec![0usize; rank];
        for slot in map.iter_mut() {
            // idx is the output multi-index; swap to address the input
            let mut src = 0usize;
            for d in 0..rank {
                let sd = if d == a { b } else if d == b { a } else { d };
                src += idx[d] * in_strides[sd];
            }
            *slot = src as i64;
            for d in (0..rank).rev() {
                idx[d] += 1;
                if idx[d] < out_shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        self.gather_map(x, &out_shape, Rc::new(map))
    }

    /// Transpose the last two axes (matrix transpose for rank 2).
    pub fn transpose(&self, x: &Tensor<T>) -> Tensor<T> {
        let rank = x.rank();
        assert!(rank >= 2, "transpose needs rank >= 2, got {:?}", x.shape());
        self.swap_axes(x, rank - 2, rank - 1)
    }

    /// Zero-pad the bottom/right of an (H, W, C) map to (new_h, new_w).
    pub fn pad_hw(&self, x: &Tensor<T>, new_h: usize, new_w: usize) -> Tensor<T> {
        assert_eq!(x.rank(), 3, "pad_hw expects (H, W, C), got {:?}", x.shape());
        let (h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        assert!(
            new_h >= h && new_w >= w,
            "pad_hw: target ({new_h}, {new_w}) smaller than input ({h}, {w})"
        );
        if new_h == h && new_w == w {
            return self.reshape(x, x.shape());
        }
        let mut map = vec![-1i64; new_h * new_w * c];
        for i in 0..h {
            for j in 0..w {
                for ch in 0..c {
                    map[(i * new_w + j) * c + ch] = ((i * w + j) * c + ch) as i64;
                }
            }
        }
        self.gather_map(x, &[new_h, new_w, c], Rc::new(map))
    }

    /// Crop an (H, W, C) map to its top-left (new_h, new_w) corner.
    pub fn crop_hw(&self, x: &Tensor<T>, new_h: usize, new_w: usize) -> Tensor<T> {
        assert_eq!(x.rank(), 3, "crop_hw expects (H, W, C), got {:?}", x.shape());
        let (h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        assert!(
            new_h <= h && new_w <= w,
            "crop_hw: target ({new_h}, {new_w}) larger than input ({h}, {w})"
        );
        if new_h == h && new_w == w {
            return self.reshape(x, x.shape());
        }
        let mut map = Vec::with_capacity(new_h * new_w * c);
        for i in 0..new_h {
            for j in 0..new_w {
                for ch in 0..c {
                    map.push(((i * w + j) * c + ch) as i64);
                }
            }
        }
        self.gather_map(x, &[new_h, new_w, c], Rc::new(map))
    }

    /// Select one slice along the first axis, dropping that axis.
    pub fn select(&self, x: &Tensor<T>, index: usize) -> Tensor<T> {
        assert!(x.rank() >= 1, "select needs rank >= 1");
        let n = x.shape()[0];
        assert!(index < n, "select index {index} out of range {n}");
        let slice: usize = x.shape()[1..].iter().product();
        let map: Vec<i64> = (0..slice).map(|i| (index * slice + i) as i64).collect();
        self.gather_map(x, &x.shape()[1..], Rc::new(map))
    }

    /// Stack equally-shaped tensors along a new leading axis.
    pub fn stack(&self, parts: &[Tensor<T>]) -> Tensor<T> {
        assert!(!parts.is_empty(), "stack of zero tensors");
        let inner = parts[0].shape().to_vec();
        let slice = parts[0].numel();
        let mut data = Vec::with_capacity(parts.len() * slice);
        for p in parts {
            assert_eq!(
                p.shape(),
                &inner[..],
                "stack: mismatched part shapes {:?} vs {:?}",
                p.shape(),
                inner
            );
            data.extend_from_slice(&p.data());
        }
        let mut shape = vec![parts.len()];
        shape.extend_from_slice(&inner);
        let mut out = Tensor::internal(data, shape, false);
        let refs: Vec<&Tensor<T>> = parts.iter().collect();
        self.record(&mut out, &refs, move |g| {
            g.chunks(slice).map(|c| c.to_vec()).collect()
        });
        out
    }

    /// Concatenate two tensors along the last axis.
    pub fn concat_last(&self, a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
        assert_eq!(a.rank(), b.rank(), "concat_last: rank mismatch");
        let rank = a.rank();
        assert!(rank >= 1, "concat_last needs rank >= 1");
        assert_eq!(
            a.shape()[..rank - 1],
            b.shape()[..rank - 1],
            "concat_last: leading shapes differ: {:?} vs {:?}",
            a.shape(),
            b.shape()
        );
        let (da, db) = (a.shape()[rank - 1], b.shape()[rank - 1]);
        let rows = a.numel() / da.max(1);
        let (ad, bd) = (a.data(), b.data());
        let mut data = Vec::with_capacity(rows * (da + db));
        for r in 0..rows {
            data.extend_from_slice(&ad[r * da..(r + 1) * da]);
            data.extend_from_slice(&bd[r * db..(r + 1) * db]);
        }
        drop(ad);
        drop(bd);
        let mut shape = a.shape().to_vec();
        shape[rank - 1] = da + db;
        let mut out = Tensor::internal(data, shape, false);
        self.record(&mut out, &[a, b], move |g| {
            let mut ga = vec![T::ZERO; rows * da];
            let mut gb = vec![T::ZERO; rows * db];
            for r in 0..rows {
                ga[r * da..(r + 1) * da].copy_from_slice(&g[r * (da + db)..r * (da + db) + da]);
                gb[r * db..(r + 1) * db]
                    .copy_from_slice(&g[r * (da + db) + da..(r + 1) * (da + db)]);
            }
            vec![ga, gb]
        });
        out
    }
}

pub(crate) fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_2d() {
        let t = Tape::inference();
        let x = Tensor::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[2, 3]);
        let y = t.transpose(&x);
        assert_eq!(y.shape(), &[3, 2]);
        assert_eq!(y.to_vec(), vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
    }

    #[test]
    fn transpose_roundtrip_bit_exact() {
        let t = Tape::inference();
        let x = Tensor::new((0..24).map(|i| i as f64 * 0.37).collect(), &[2, 3, 4]);
        let back = t.transpose(&t.transpose(&x));
        assert_eq!(back.to_vec(), x.to_vec());
    }

    #[test]
    fn reshape_roundtrip_bit_exact() {
        let t = Tape::inference();
        let x = Tensor::new((0..12).map(|i| i as f64).collect(), &[3, 4]);
        let y = t.reshape(&t.reshape(&x, &[2, 6]), &[3, 4]);
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn swap_axes_middle() {
        let t = Tape::inference();
        // shape [2,3,1]: swapping first two axes transposes the leading grid
        let x = Tensor::new(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], &[2, 3, 1]);
        let y = t.swap_axes(&x, 0, 1);
        assert_eq!(y.shape(), &[3, 2, 1]);
        assert_eq!(y.to_vec(), vec![0.0, 3.0, 1.0, 4.0, 2.0, 5.0]);
    }

    #[test]
    fn pad_then_crop_identity() {
        let t = Tape::inference();
        let x = Tensor::new((0..12).map(|i| i as f64).collect(), &[2, 2, 3]);
        let padded = t.pad_hw(&x, 4, 3);
        assert_eq!(padded.shape(), &[4, 3, 3]);
        let back = t.crop_hw(&padded, 2, 2);
        assert_eq!(back.to_vec(), x.to_vec());
    }

    #[test]
    fn stack_select_roundtrip() {
        let t = Tape::inference();
        let a = Tensor::new(vec![1.0, 2.0], &[2]);
        let b = Tensor::new(vec![3.0, 4.0], &[2]);
        let s = t.stack(&[a, b]);
        assert_eq!(s.shape(), &[2, 2]);
        assert_eq!(t.select(&s, 1).to_vec(), vec![3.0, 4.0]);
    }

    #[test]
    fn concat_last_splits_gradient() {
        let t = Tape::new();
        let a = Tensor::param(vec![1.0, 2.0], &[1, 2]);
        let b = Tensor::param(vec![3.0], &[1, 1]);
        let y = t.concat_last(&a, &b);
        assert_eq!(y.to_vec(), vec![1.0, 2.0, 3.0]);
        let w = Tensor::new(vec![10.0, 20.0, 30.0], &[1, 3]);
        let loss = t.sum_all(&t.mul(&y, &w));
        t.backward(&loss).unwrap();
        assert_eq!(a.grad(), vec![10.0, 20.0]);
        assert_eq!(b.grad(), vec![30.0]);
    }
}

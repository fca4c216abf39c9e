//! Matrix multiplication and convolution.
//!
//! Dense convolution is im2col followed by matmul, so the matmul backward
//! rule is the only gradient rule it needs. Depthwise convolution has its
//! own direct rule (a block-diagonal im2col would waste most of its width).

use super::{Scalar, Tape, Tensor};
use std::rc::Rc;

fn mat_mul_slice<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    // ikj loop order keeps the b rows contiguous
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            if av == T::ZERO {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for j in 0..n {
                orow[j] += av * brow[j];
            }
        }
    }
}

fn transpose_slice<T: Scalar>(a: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = vec![T::ZERO; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a[i * cols + j];
        }
    }
    out
}

impl<T: Scalar> Tape<T> {
    /// Batched matrix product.
    ///
    /// `a` has shape `[..., m, k]`. `b` is either `[k, n]` (shared across
    /// the leading batch of `a`) or `[..., k, n]` with identical leading
    /// dims. Output is `[..., m, n]`.
    pub fn matmul(&self, a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
        assert!(
            a.rank() >= 2 && b.rank() >= 2,
            "matmul needs rank >= 2 operands, got {:?} x {:?}",
            a.shape(),
            b.shape()
        );
        let (m, k) = (a.shape()[a.rank() - 2], a.shape()[a.rank() - 1]);
        let (kb, n) = (b.shape()[b.rank() - 2], b.shape()[b.rank() - 1]);
        assert_eq!(
            k, kb,
            "matmul: inner extents disagree: {:?} x {:?}",
            a.shape(),
            b.shape()
        );
        let batch: usize = a.shape()[..a.rank() - 2].iter().product();
        let b_shared = b.rank() == 2;
        if !b_shared {
            assert_eq!(
                a.shape()[..a.rank() - 2],
                b.shape()[..b.rank() - 2],
                "matmul: leading batch dims disagree: {:?} x {:?}",
                a.shape(),
                b.shape()
            );
        }

        let (ad, bd) = (a.data(), b.data());
        let mut data = vec![T::ZERO; batch * m * n];
        for bi in 0..batch {
            let a_off = bi * m * k;
            let b_off = if b_shared { 0 } else { bi * k * n };
            mat_mul_slice(
                &ad[a_off..a_off + m * k],
                &bd[b_off..b_off + k * n],
                m,
                k,
                n,
                &mut data[bi * m * n..(bi + 1) * m * n],
            );
        }
        drop(ad);
        drop(bd);

        let mut out_shape = a.shape()[..a.rank() - 2].to_vec();
        out_shape.push(m);
        out_shape.push(n);
        let mut out = Tensor::internal(data, out_shape, false);

        let (a_rc, b_rc) = (a.data_rc(), b.data_rc());
        let b_numel = b.numel();
        self.record(&mut out, &[a, b], move |g| {
            let (ad, bd) = (a_rc.borrow(), b_rc.borrow());
            let mut ga = vec![T::ZERO; ad.len()];
            let mut gb = vec![T::ZERO; b_numel];
            for bi in 0..batch {
                let g_sl = &g[bi * m * n..(bi + 1) * m * n];
                let a_off = bi * m * k;
                let b_off = if b_shared { 0 } else { bi * k * n };
                // grad_a = g . b^T
                let bt = transpose_slice(&bd[b_off..b_off + k * n], k, n);
                mat_mul_slice(g_sl, &bt, m, n, k, &mut ga[a_off..a_off + m * k]);
                // grad_b += a^T . g  (accumulates when b is shared)
                let at = transpose_slice(&ad[a_off..a_off + m * k], m, k);
                mat_mul_slice(&at, g_sl, k, m, n, &mut gb[b_off..b_off + k * n]);
            }
            vec![ga, gb]
        });
        out
    }

    /// Lay out sliding 3x3-style windows as rows: `[H'*W', kh*kw*Cin]`.
    ///
    /// Entries inside a row are ordered (ki, kj, c), matching a
    /// `[kh, kw, Cin, Cout]` weight tensor flattened row-major.
    pub fn im2col(
        &self,
        x: &Tensor<T>,
        kh: usize,
        kw: usize,
        stride: usize,
        padding: usize,
    ) -> Tensor<T> {
        assert_eq!(x.rank(), 3, "im2col expects (H, W, C), got {:?}", x.shape());
        assert!(kh >= 1 && kw >= 1 && stride >= 1, "im2col: bad kernel/stride");
        let (h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (oh, ow) = conv_output_extent(h, w, kh, kw, stride, padding);
        let mut map = Vec::with_capacity(oh * ow * kh * kw * c);
        for out_i in 0..oh {
            for out_j in 0..ow {
                for ki in 0..kh {
                    for kj in 0..kw {
                        let ii = (out_i * stride + ki) as i64 - padding as i64;
                        let jj = (out_j * stride + kj) as i64 - padding as i64;
                        let inside = ii >= 0 && ii < h as i64 && jj >= 0 && jj < w as i64;
                        for ch in 0..c {
                            map.push(if inside {
                                ((ii as usize * w + jj as usize) * c + ch) as i64
                            } else {
                                -1
                            });
                        }
                    }
                }
            }
        }
        self.gather_map(x, &[oh * ow, kh * kw * c], Rc::new(map))
    }

    /// 2-D cross-correlation: `x (H,W,Cin)` with `w (kh,kw,Cin,Cout)`.
    pub fn conv2d(
        &self,
        x: &Tensor<T>,
        w: &Tensor<T>,
        bias: Option<&Tensor<T>>,
        stride: usize,
        padding: usize,
    ) -> Tensor<T> {
        assert_eq!(x.rank(), 3, "conv2d expects (H, W, Cin) input, got {:?}", x.shape());
        assert_eq!(
            w.rank(),
            4,
            "conv2d expects (kh, kw, Cin, Cout) weights, got {:?}",
            w.shape()
        );
        let (kh, kw, cin, cout) = (w.shape()[0], w.shape()[1], w.shape()[2], w.shape()[3]);
        assert_eq!(
            x.shape()[2],
            cin,
            "conv2d: input channels {:?} do not match weights {:?}",
            x.shape(),
            w.shape()
        );
        let (oh, ow) =
            conv_output_extent(x.shape()[0], x.shape()[1], kh, kw, stride, padding);
        let cols = self.im2col(x, kh, kw, stride, padding);
        let wm = self.reshape(w, &[kh * kw * cin, cout]);
        let mut y = self.matmul(&cols, &wm);
        if let Some(b) = bias {
            assert_eq!(b.shape(), &[cout], "conv2d: bias shape {:?}", b.shape());
            y = self.add(&y, b);
        }
        self.reshape(&y, &[oh, ow, cout])
    }

    /// Depthwise 2-D cross-correlation: `x (H,W,C)` with `w (kh,kw,C)`,
    /// one spatial filter per channel.
    pub fn depthwise_conv2d(
        &self,
        x: &Tensor<T>,
        w: &Tensor<T>,
        bias: Option<&Tensor<T>>,
        stride: usize,
        padding: usize,
    ) -> Tensor<T> {
        assert_eq!(x.rank(), 3, "depthwise_conv2d expects (H, W, C), got {:?}", x.shape());
        assert_eq!(
            w.rank(),
            3,
            "depthwise_conv2d expects (kh, kw, C) weights, got {:?}",
            w.shape()
        );
        let (h, wd, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (kh, kw) = (w.shape()[0], w.shape()[1]);
        assert_eq!(
            w.shape()[2],
            c,
            "depthwise_conv2d: channels {:?} do not match weights {:?}",
            x.shape(),
            w.shape()
        );
        let (oh, ow) = conv_output_extent(h, wd, kh, kw, stride, padding);

        let (xd, wdat) = (x.data(), w.data());
        let mut data = vec![T::ZERO; oh * ow * c];
        for oi in 0..oh {
            for oj in 0..ow {
                for ki in 0..kh {
                    let ii = (oi * stride + ki) as i64 - padding as i64;
                    if ii < 0 || ii >= h as i64 {
                        continue;
                    }
                    for kj in 0..kw {
                        let jj = (oj * stride + kj) as i64 - padding as i64;
                        if jj < 0 || jj >= wd as i64 {
                            continue;
                        }
                        let xoff = (ii as usize * wd + jj as usize) * c;
                        let woff = (ki * kw + kj) * c;
                        let ooff = (oi * ow + oj) * c;
                        for ch in 0..c {
                            data[ooff + ch] += xd[xoff + ch] * wdat[woff + ch];
                        }
                    }
                }
            }
        }
        drop(xd);
        drop(wdat);

        let mut out = Tensor::internal(data, vec![oh, ow, c], false);
        let (x_rc, w_rc) = (x.data_rc(), w.data_rc());
        self.record(&mut out, &[x, w], move |g| {
            let (xd, wdat) = (x_rc.borrow(), w_rc.borrow());
            let mut gx = vec![T::ZERO; h * wd * c];
            let mut gw = vec![T::ZERO; kh * kw * c];
            for oi in 0..oh {
                for oj in 0..ow {
                    for ki in 0..kh {
                        let ii = (oi * stride + ki) as i64 - padding as i64;
                        if ii < 0 || ii >= h as i64 {
                            continue;
                        }
                        for kj in 0..kw {
                            let jj = (oj * stride + kj) as i64 - padding as i64;
                            if jj < 0 || jj >= wd as i64 {
                                continue;
                            }
                            let xoff = (ii as usize * wd + jj as usize) * c;
                            let woff = (ki * kw + kj) * c;
                            let ooff = (oi * ow + oj) * c;
                            for ch in 0..c {
                                gx[xoff + ch] += g[ooff + ch] * wdat[woff + ch];
                                gw[woff + ch] += g[ooff + ch] * xd[xoff + ch];
                            }
                        }
                    }
                }
            }
            vec![gx, gw]
        });

        if let Some(b) = bias {
            assert_eq!(b.shape(), &[c], "depthwise_conv2d: bias shape {:?}", b.shape());
            return self.add(&out, b);
        }
        out
    }
}

/// Floor-division output extents; panics on a non-positive extent.
pub(crate) fn conv_output_extent(
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    padding: usize,
) -> (usize, usize) {
    let oh = (h + 2 * padding).checked_sub(kh).map(|v| v / stride + 1);
    let ow = (w + 2 * padding).checked_sub(kw).map(|v| v / stride + 1);
    match (oh, ow) {
        (Some(oh), Some(ow)) if oh > 0 && ow > 0 => (oh, ow),
        _ => panic!(
            "conv: non-positive output extent for input ({h}, {w}), \
             kernel ({kh}, {kw}), stride {stride}, padding {padding}"
        ),
    }
}

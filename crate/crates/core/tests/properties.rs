//! Property tests for the structural invariants.

use fast_core::mobilevit::{fold, unfold};
use fast_core::oracle::{conv2d_naive, depthwise_conv2d_naive};
use fast_core::{Tape, Tensor};
use proptest::prelude::*;

fn finite_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0f64..10.0, len)
}

proptest! {
    #[test]
    fn softmax_rows_are_distributions(data in finite_vec(12)) {
        let tape = Tape::inference();
        let x = Tensor::new(data, &[3, 4]);
        let y = tape.softmax_last(&x).to_vec();
        for row in y.chunks(4) {
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-6);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn softmax_preserves_argmax(data in finite_vec(6)) {
        let argmax_in = data
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let tape = Tape::inference();
        let y = tape.softmax_last(&Tensor::new(data.clone(), &[6])).to_vec();
        let argmax_out = y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        prop_assert_eq!(argmax_in, argmax_out);
    }

    #[test]
    fn softmax_shift_invariant(data in finite_vec(5), shift in -50.0f64..50.0) {
        let tape = Tape::inference();
        let x = Tensor::new(data.clone(), &[5]);
        let shifted = tape.add_scalar(&x, shift);
        let a = tape.softmax_last(&x).to_vec();
        let b = tape.softmax_last(&shifted).to_vec();
        for (u, v) in a.iter().zip(b.iter()) {
            prop_assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn reshape_and_transpose_are_lossless(data in finite_vec(24)) {
        let tape = Tape::inference();
        let x = Tensor::new(data.clone(), &[4, 6]);
        let through = tape.reshape(&tape.reshape(&x, &[2, 12]), &[4, 6]);
        prop_assert_eq!(
            through.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            data.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let back = tape.transpose(&tape.transpose(&x));
        prop_assert_eq!(
            back.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            data.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn conv2d_matches_naive_oracle(
        h in 3usize..=8,
        w in 3usize..=8,
        cin in 1usize..=4,
        cout in 1usize..=3,
        k in prop::sample::select(vec![1usize, 3]),
        stride in 1usize..=2,
        padding in 0usize..=1,
        seed in 0u64..1000,
    ) {
        prop_assume!(h + 2 * padding >= k && w + 2 * padding >= k);
        let mut rng = fast_core::Rng::new(seed);
        let x: Vec<f64> = (0..h * w * cin).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
        let wts: Vec<f64> = (0..k * k * cin * cout).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let tape = Tape::inference();
        let ours = tape
            .conv2d(
                &Tensor::new(x.clone(), &[h, w, cin]),
                &Tensor::new(wts.clone(), &[k, k, cin, cout]),
                None,
                stride,
                padding,
            )
            .to_vec();
        let naive = conv2d_naive(&x, h, w, cin, &wts, k, k, cout, stride, padding);
        prop_assert_eq!(ours.len(), naive.len());
        for (a, b) in ours.iter().zip(naive.iter()) {
            prop_assert!((a - b).abs() < 1e-12, "conv mismatch: {} vs {}", a, b);
        }
    }

    #[test]
    fn depthwise_matches_naive_oracle(
        h in 3usize..=8,
        w in 3usize..=8,
        c in 1usize..=4,
        stride in 1usize..=2,
        padding in 0usize..=1,
        seed in 0u64..1000,
    ) {
        prop_assume!(h + 2 * padding >= 3 && w + 2 * padding >= 3);
        let mut rng = fast_core::Rng::new(seed);
        let x: Vec<f64> = (0..h * w * c).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
        let wts: Vec<f64> = (0..9 * c).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let tape = Tape::inference();
        let ours = tape
            .depthwise_conv2d(
                &Tensor::new(x.clone(), &[h, w, c]),
                &Tensor::new(wts.clone(), &[3, 3, c]),
                None,
                stride,
                padding,
            )
            .to_vec();
        let naive = depthwise_conv2d_naive(&x, h, w, c, &wts, 3, 3, stride, padding);
        for (a, b) in ours.iter().zip(naive.iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unfold_fold_identity_over_valid_shapes(
        ph in 1usize..=3,
        pw in 1usize..=3,
        grid_h in 1usize..=4,
        grid_w in 1usize..=4,
        c in 1usize..=3,
        seed in 0u64..1000,
    ) {
        let (h, w) = (ph * grid_h, pw * grid_w);
        let mut rng = fast_core::Rng::new(seed);
        let data: Vec<f64> = (0..h * w * c).map(|_| rng.normal()).collect();
        let tape = Tape::inference();
        let x = Tensor::new(data.clone(), &[h, w, c]);
        let u = unfold(&tape, &x, (pw, ph));
        prop_assert_eq!(u.shape(), &[pw * ph, grid_h * grid_w, c]);
        let back = fold(&tape, &u, (pw, ph), (h, w));
        prop_assert_eq!(
            back.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            data.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn swap_axes_is_self_inverse(
        a in 1usize..=3,
        b in 1usize..=3,
        c in 1usize..=3,
        seed in 0u64..1000,
    ) {
        let mut rng = fast_core::Rng::new(seed);
        let data: Vec<f64> = (0..a * b * c).map(|_| rng.normal()).collect();
        let tape = Tape::inference();
        let x = Tensor::new(data.clone(), &[a, b, c]);
        let back = tape.swap_axes(&tape.swap_axes(&x, 0, 2), 0, 2);
        prop_assert_eq!(back.to_vec(), data);
    }
}

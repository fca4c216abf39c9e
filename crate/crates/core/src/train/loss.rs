//! Loss wrappers with input validation at the public boundary.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tape, Tensor};

/// Mean binary cross-entropy from logits, multi-label over `[B, C]` (or
/// any matching shapes). Targets must be exactly 0 or 1.
pub fn bce_loss<T: Scalar>(
    tape: &Tape<T>,
    logits: &Tensor<T>,
    targets: &Tensor<T>,
) -> Result<Tensor<T>> {
    if logits.shape() != targets.shape() {
        return Err(Error::Usage(format!(
            "bce_loss: logits {:?} vs targets {:?}",
            logits.shape(),
            targets.shape()
        )));
    }
    if logits.numel() == 0 {
        return Err(Error::Usage("bce_loss: empty batch".into()));
    }
    for &t in targets.data().iter() {
        if t != T::ZERO && t != T::ONE {
            return Err(Error::Usage(format!("bce_loss: target {t} not in {{0, 1}}")));
        }
    }
    Ok(tape.bce_with_logits(logits, targets))
}

/// Mean categorical cross-entropy from `[B, C]` logits and class indices.
pub fn cross_entropy_loss<T: Scalar>(
    tape: &Tape<T>,
    logits: &Tensor<T>,
    labels: &[usize],
) -> Result<Tensor<T>> {
    if logits.rank() != 2 {
        return Err(Error::Usage(format!(
            "cross_entropy_loss expects [B, C] logits, got {:?}",
            logits.shape()
        )));
    }
    let (b, c) = (logits.shape()[0], logits.shape()[1]);
    if b == 0 {
        return Err(Error::Usage("cross_entropy_loss: empty batch".into()));
    }
    if labels.len() != b {
        return Err(Error::Usage(format!(
            "cross_entropy_loss: {} labels for batch {b}",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::Usage(format!(
            "cross_entropy_loss: label {bad} out of range [0, {c})"
        )));
    }
    Ok(tape.cross_entropy(logits, labels))
}

/// One-hot targets for multi-label BCE training on single-label data.
pub fn one_hot<T: Scalar>(labels: &[usize], classes: usize) -> Tensor<T> {
    let mut data = vec![T::ZERO; labels.len() * classes];
    for (i, &l) in labels.iter().enumerate() {
        assert!(l < classes, "label {l} out of range {classes}");
        data[i * classes + l] = T::ONE;
    }
    Tensor::new(data, &[labels.len(), classes])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::metrics_ref::bce_reference;
    use crate::rng::Rng;

    #[test]
    fn bce_matches_naive_sigmoid_log_oracle() {
        let tape = Tape::inference();
        let mut rng = Rng::new(17);
        for _ in 0..20 {
            let logits: Vec<f64> = (0..8).map(|_| rng.normal() * 3.0).collect();
            let targets: Vec<f64> = (0..8).map(|_| f64::from(rng.bernoulli(0.5))).collect();
            let l = bce_loss(
                &tape,
                &Tensor::new(logits.clone(), &[8]),
                &Tensor::new(targets.clone(), &[8]),
            )
            .unwrap()
            .item();
            let reference = bce_reference(&logits, &targets);
            assert!((l - reference).abs() < 1e-9, "{l} vs {reference}");
        }
    }

    #[test]
    fn bce_rejects_fractional_targets() {
        let tape = Tape::inference();
        let z = Tensor::new(vec![0.0], &[1]);
        let t = Tensor::new(vec![0.5], &[1]);
        assert!(matches!(bce_loss(&tape, &z, &t), Err(Error::Usage(_))));
    }

    #[test]
    fn ce_rejects_out_of_range_label() {
        let tape = Tape::<f64>::inference();
        let z = Tensor::zeros(&[1, 3]);
        assert!(matches!(
            cross_entropy_loss(&tape, &z, &[3]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn losses_are_nonnegative() {
        let tape = Tape::inference();
        let mut rng = Rng::new(23);
        for _ in 0..50 {
            let z: Vec<f64> = (0..6).map(|_| rng.normal() * 5.0).collect();
            let t: Vec<f64> = (0..6).map(|_| f64::from(rng.bernoulli(0.5))).collect();
            let bce = bce_loss(&tape, &Tensor::new(z.clone(), &[6]), &Tensor::new(t, &[6]))
                .unwrap()
                .item();
            assert!(bce >= 0.0);
            let z2 = Tensor::new(z, &[2, 3]);
            let ce = cross_entropy_loss(&tape, &z2, &[0, 2]).unwrap().item();
            assert!(ce >= 0.0);
        }
    }

    #[test]
    fn one_hot_layout() {
        let t = one_hot::<f64>(&[1, 0], 3);
        assert_eq!(t.to_vec(), vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
    }
}

//! Classification metrics: accuracy, binary F1, mean average precision.

use crate::error::{Error, Result};

/// Fraction of predictions equal to their label.
pub fn accuracy(preds: &[usize], labels: &[usize]) -> Result<f64> {
    if preds.is_empty() || preds.len() != labels.len() {
        return Err(Error::Usage(format!(
            "accuracy: got {} predictions and {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let correct = preds
        .iter()
        .zip(labels.iter())
        .filter(|(p, l)| p == l)
        .count();
    Ok(correct as f64 / preds.len() as f64)
}

/// Harmonic mean of precision and recall on a binary task, 0 when both
/// vanish.
pub fn f1_binary(preds: &[u8], labels: &[u8]) -> Result<f64> {
    if preds.is_empty() || preds.len() != labels.len() {
        return Err(Error::Usage(format!(
            "f1_binary: got {} predictions and {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.iter().chain(labels.iter()).any(|&v| v > 1) {
        return Err(Error::Usage("f1_binary: values must be 0 or 1".into()));
    }
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    for (&p, &l) in preds.iter().zip(labels.iter()) {
        match (p, l) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fn_ += 1,
            _ => {}
        }
    }
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    Ok(if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    })
}

/// Mean over classes of average precision (area under the rank-based
/// precision-recall step function: precision summed at each positive
/// rank, divided by the positive count). Samples are ranked by score
/// descending with ties broken by original order (stable sort). Classes
/// with no positive sample are skipped.
pub fn mean_average_precision(
    scores: &[f64],
    targets: &[bool],
    batch: usize,
    classes: usize,
) -> Result<f64> {
    if batch == 0 || classes == 0 {
        return Err(Error::Usage("mean_average_precision: empty input".into()));
    }
    if scores.len() != batch * classes || targets.len() != batch * classes {
        return Err(Error::Usage(format!(
            "mean_average_precision: need {} entries, got {} scores and {} targets",
            batch * classes,
            scores.len(),
            targets.len()
        )));
    }
    let mut aps = Vec::new();
    for c in 0..classes {
        let n_pos = (0..batch).filter(|&b| targets[b * classes + c]).count();
        if n_pos == 0 {
            continue;
        }
        let mut order: Vec<usize> = (0..batch).collect();
        // stable: ties keep original sample order
        order.sort_by(|&a, &b| {
            scores[b * classes + c]
                .partial_cmp(&scores[a * classes + c])
                .expect("non-finite score")
        });
        let mut hits = 0usize;
        let mut ap = 0.0;
        for (rank0, &sample) in order.iter().enumerate() {
            if targets[sample * classes + c] {
                hits += 1;
                ap += hits as f64 / (rank0 + 1) as f64;
            }
        }
        aps.push(ap / n_pos as f64);
    }
    if aps.is_empty() {
        return Err(Error::Usage(
            "mean_average_precision: no class has a positive sample".into(),
        ));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Predicted class per row of a `[B, C]` score matrix.
pub fn argmax_rows(scores: &[f64], batch: usize, classes: usize) -> Vec<usize> {
    (0..batch)
        .map(|b| {
            let row = &scores[b * classes..(b + 1) * classes];
            row.iter()
                .enumerate()
                .max_by(|x, y| x.1.partial_cmp(y.1).expect("non-finite score"))
                .map(|(i, _)| i)
                .unwrap_or(0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::metrics_ref::{f1_binary_reference, mean_average_precision_reference};
    use crate::rng::Rng;

    #[test]
    fn perfect_predictions() {
        assert_eq!(accuracy(&[0, 1, 1], &[0, 1, 1]).unwrap(), 1.0);
        assert_eq!(f1_binary(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
    }

    #[test]
    fn spec_confusion_case() {
        assert_eq!(f1_binary(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap(), 0.5);
    }

    #[test]
    fn empty_input_is_usage_error() {
        assert!(matches!(accuracy(&[], &[]), Err(Error::Usage(_))));
        assert!(matches!(f1_binary(&[], &[]), Err(Error::Usage(_))));
        assert!(matches!(
            mean_average_precision(&[], &[], 0, 2),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn f1_matches_oracle_on_all_length4_patterns() {
        for p_bits in 0..16u8 {
            for l_bits in 0..16u8 {
                let preds: Vec<u8> = (0..4).map(|i| (p_bits >> i) & 1).collect();
                let labels: Vec<u8> = (0..4).map(|i| (l_bits >> i) & 1).collect();
                assert_eq!(
                    f1_binary(&preds, &labels).unwrap(),
                    f1_binary_reference(&preds, &labels),
                    "preds {preds:?} labels {labels:?}"
                );
            }
        }
    }

    #[test]
    fn map_of_spec_example_is_one() {
        let scores = [0.9, 0.1, 0.8, 0.7, 0.2, 0.6];
        let targets = [true, false, false, true, false, true];
        let map = mean_average_precision(&scores, &targets, 3, 2).unwrap();
        assert!((map - 1.0).abs() < 1e-12);
    }

    #[test]
    fn map_matches_rank_enumeration_oracle() {
        let mut rng = Rng::new(31);
        for _ in 0..50 {
            let batch = 2 + rng.below(8);
            let classes = 1 + rng.below(4);
            let scores: Vec<f64> = (0..batch * classes).map(|_| rng.uniform()).collect();
            let mut targets: Vec<bool> =
                (0..batch * classes).map(|_| rng.bernoulli(0.4)).collect();
            if !targets.iter().any(|&t| t) {
                targets[0] = true;
            }
            let ours = mean_average_precision(&scores, &targets, batch, classes).unwrap();
            let reference =
                mean_average_precision_reference(&scores, &targets, batch, classes);
            assert!((ours - reference).abs() < 1e-9, "{ours} vs {reference}");
            assert!((0.0..=1.0).contains(&ours));
        }
    }

    #[test]
    fn map_invariant_to_sample_permutation_with_distinct_scores() {
        let scores = [0.91, 0.13, 0.82, 0.74, 0.25, 0.66, 0.31, 0.47];
        let targets = [true, false, false, true, true, false, false, true];
        let base = mean_average_precision(&scores, &targets, 4, 2).unwrap();
        // rotate samples
        let perm = [2usize, 0, 3, 1];
        let mut ps = vec![0.0; 8];
        let mut pt = vec![false; 8];
        for (new, &old) in perm.iter().enumerate() {
            for c in 0..2 {
                ps[new * 2 + c] = scores[old * 2 + c];
                pt[new * 2 + c] = targets[old * 2 + c];
            }
        }
        let permuted = mean_average_precision(&ps, &pt, 4, 2).unwrap();
        assert!((base - permuted).abs() < 1e-12);
    }
}

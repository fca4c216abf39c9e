//! Hand-rolled metric references: explicit counting loops, no shared code
//! with `train::metrics`.

/// F1 from an explicitly enumerated confusion matrix.
pub fn f1_binary_reference(preds: &[u8], labels: &[u8]) -> f64 {
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
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Average precision for one class by rank enumeration, without sorting:
/// for every positive sample, its rank and the number of positives at or
/// above it are found by counting comparisons (ties resolved by original
/// index, matching the stable-order contract). Returns `None` when the
/// class has no positives.
#[allow(clippy::needless_range_loop)]
pub fn average_precision_reference(scores: &[f64], positives: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), positives.len());
    let n = scores.len();
    let n_pos = positives.iter().filter(|&&p| p).count();
    if n_pos == 0 {
        return None;
    }
    // sample j outranks sample i when its score is higher, or equal with
    // a smaller original index
    let outranks = |j: usize, i: usize| scores[j] > scores[i] || (scores[j] == scores[i] && j < i);
    let mut ap = 0.0;
    for i in 0..n {
        if !positives[i] {
            continue;
        }
        let mut rank = 1usize;
        let mut hits = 1usize;
        for j in 0..n {
            if j != i && outranks(j, i) {
                rank += 1;
                if positives[j] {
                    hits += 1;
                }
            }
        }
        ap += hits as f64 / rank as f64;
    }
    Some(ap / n_pos as f64)
}

/// Mean of per-class reference APs, skipping classes without positives.
pub fn mean_average_precision_reference(
    scores: &[f64],
    targets: &[bool],
    batch: usize,
    classes: usize,
) -> f64 {
    assert_eq!(scores.len(), batch * classes);
    assert_eq!(targets.len(), batch * classes);
    let mut aps = Vec::new();
    for c in 0..classes {
        let col_scores: Vec<f64> = (0..batch).map(|b| scores[b * classes + c]).collect();
        let col_pos: Vec<bool> = (0..batch).map(|b| targets[b * classes + c]).collect();
        if let Some(ap) = average_precision_reference(&col_scores, &col_pos) {
            aps.push(ap);
        }
    }
    assert!(!aps.is_empty(), "no class has a positive sample");
    aps.iter().sum::<f64>() / aps.len() as f64
}

/// Direct sigmoid-then-log binary cross-entropy, the numerically naive
/// formula the stable implementation must agree with on moderate logits.
pub fn bce_reference(logits: &[f64], targets: &[f64]) -> f64 {
    assert_eq!(logits.len(), targets.len());
    let mut total = 0.0;
    for (&z, &t) in logits.iter().zip(targets.iter()) {
        let p = 1.0 / (1.0 + (-z).exp());
        total += -(t * p.ln() + (1.0 - t) * (1.0 - p).ln());
    }
    total / logits.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_hand_count_case() {
        // preds [1,1,0,0], labels [1,0,1,0]: tp=1 fp=1 fn=1 -> P=R=0.5, F1=0.5
        assert_eq!(f1_binary_reference(&[1, 1, 0, 0], &[1, 0, 1, 0]), 0.5);
    }

    #[test]
    fn ap_all_positives_ranked_first_is_one() {
        let ap = average_precision_reference(&[0.9, 0.8, 0.1], &[true, true, false]).unwrap();
        assert_eq!(ap, 1.0);
    }

    #[test]
    fn ap_none_when_no_positives() {
        assert!(average_precision_reference(&[0.5, 0.2], &[false, false]).is_none());
    }

    #[test]
    fn spec_two_class_map_case() {
        // scores rows: (0.9,0.1), (0.8,0.7), (0.2,0.6); one-hot targets 0,1,1
        let scores = [0.9, 0.1, 0.8, 0.7, 0.2, 0.6];
        let targets = [true, false, false, true, false, true];
        let map = mean_average_precision_reference(&scores, &targets, 3, 2);
        // class 0: positive ranked first -> AP 1; class 1: positives at
        // ranks 1,2 -> AP 1; mean 1.0
        assert!((map - 1.0).abs() < 1e-12);
    }
}

//! Confusion matrices and the metrics derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(n_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|c| self.counts[c][c]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (row, o) in self.counts.iter_mut().zip(&other.counts) {
            row.iter_mut().zip(o).for_each(|(a, b)| *a += b);
        }
    }
}

/// Counts `(true, predicted)` pairs into a `n_classes × n_classes` matrix.
pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let mut cm = ConfusionMatrix::zeros(n_classes);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::InvalidDataset(format!(
                "class index {} out of range for {n_classes} classes",
                t.max(p)
            )));
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Accuracy plus per-class and macro-averaged precision, recall and F1.
/// Empty denominators yield 0.
pub fn metrics_from_cm(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let k = cm.n_classes();
    let mut precision = Vec::with_capacity(k);
    let mut recall = Vec::with_capacity(k);
    let mut f1 = Vec::with_capacity(k);
    for c in 0..k {
        let tp = cm.counts[c][c];
        let predicted: u64 = cm.counts.iter().map(|r| r[c]).sum();
        let actual: u64 = cm.counts[c].iter().sum();
        let (p, r) = (ratio(tp, predicted), ratio(tp, actual));
        precision.push(p);
        recall.push(r);
        f1.push(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) });
    }
    Ok(Metrics {
        accuracy: ratio(cm.trace(), total),
        macro_precision: mean(&precision),
        macro_recall: mean(&recall),
        macro_f1: mean(&f1),
        precision,
        recall,
        f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counting_examples() {
        let cm = confusion_matrix(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 1], vec![0, 2]]);
        let diag = confusion_matrix(&[0, 2, 1, 2], &[0, 2, 1, 2], 3).unwrap();
        assert_eq!(diag.trace(), diag.total());
        assert_eq!(confusion_matrix(&[], &[], 2).unwrap(), ConfusionMatrix::zeros(2));
        assert!(matches!(
            confusion_matrix(&[0], &[], 2),
            Err(Error::LengthMismatch(1, 0))
        ));
        assert!(confusion_matrix(&[0], &[3], 2).is_err());
    }

    #[test]
    fn hand_computed_metrics() {
        let cm = ConfusionMatrix {
            counts: vec![vec![1, 1], vec![0, 2]],
        };
        let m = metrics_from_cm(&cm).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert_eq!(m.accuracy, 0.75);
        assert!(close(m.precision[0], 1.0) && close(m.precision[1], 2.0 / 3.0));
        assert!(close(m.recall[0], 0.5) && close(m.recall[1], 1.0));
        assert!(close(m.f1[0], 2.0 / 3.0) && close(m.f1[1], 0.8));
        assert!((m.macro_f1 - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-12);
        assert!((m.macro_f1 - 0.7333).abs() < 1e-4);
    }

    #[test]
    fn perfect_and_degenerate_cases() {
        let mut cm = ConfusionMatrix::zeros(4);
        for c in 0..4 {
            cm.counts[c][c] = 3;
        }
        let m = metrics_from_cm(&cm).unwrap();
        assert_eq!(
            (m.accuracy, m.macro_precision, m.macro_recall, m.macro_f1),
            (1.0, 1.0, 1.0, 1.0)
        );

        // class 2 never true and never predicted
        let cm = confusion_matrix(&[0, 1], &[0, 1], 3).unwrap();
        let m = metrics_from_cm(&cm).unwrap();
        assert_eq!((m.precision[2], m.recall[2], m.f1[2]), (0.0, 0.0, 0.0));
        assert!(matches!(
            metrics_from_cm(&ConfusionMatrix::zeros(2)),
            Err(Error::EmptyMatrix)
        ));
    }

    fn labels() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
        (1usize..60).prop_flat_map(|n| {
            (
                proptest::collection::vec(0usize..4, n),
                proptest::collection::vec(0usize..4, n),
            )
        })
    }

    proptest! {
        #[test]
        fn accuracy_is_mean_correctness((t, p) in labels()) {
            let m = metrics_from_cm(&confusion_matrix(&t, &p, 4).unwrap()).unwrap();
            let direct = t.iter().zip(&p).filter(|(a, b)| a == b).count() as f64 / t.len() as f64;
            prop_assert!((m.accuracy - direct).abs() < 1e-15);
            for v in [m.accuracy, m.macro_precision, m.macro_recall, m.macro_f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn macro_metrics_ignore_relabeling((t, p) in labels(), perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
            let a = metrics_from_cm(&confusion_matrix(&t, &p, 4).unwrap()).unwrap();
            let relabel = |v: &[usize]| v.iter().map(|&c| perm[c]).collect::<Vec<_>>();
            let b = metrics_from_cm(&confusion_matrix(&relabel(&t), &relabel(&p), 4).unwrap()).unwrap();
            prop_assert!((a.macro_precision - b.macro_precision).abs() < 1e-12);
            prop_assert!((a.macro_recall - b.macro_recall).abs() < 1e-12);
            prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
        }
    }
}

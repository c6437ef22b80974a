use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// One-vs-rest counts per class plus accuracy and macro averages. Any
/// ratio with a zero denominator is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub total: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_confusion(confusion: Vec<Vec<usize>>) -> Self {
        let p = confusion.len();
        let total: usize = confusion.iter().flatten().sum();
        let correct: usize = (0..p).map(|c| confusion[c][c]).sum();
        let per_class: Vec<ClassMetrics> = (0..p)
            .map(|c| {
                let tp = confusion[c][c];
                let actual: usize = confusion[c].iter().sum();
                let predicted: usize = (0..p).map(|r| confusion[r][c]).sum();
                let (fp, fn_) = (predicted - tp, actual - tp);
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, actual);
                let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
                ClassMetrics { tp, fp, fn_, tn: total - tp - fp - fn_, precision, recall, f1 }
            })
            .collect();
        let mean = |f: fn(&ClassMetrics) -> f64| {
            if p == 0 {
                0.0
            } else {
                per_class.iter().map(f).sum::<f64>() / p as f64
            }
        };
        Self {
            total,
            accuracy: ratio(correct, total),
            precision: mean(|c| c.precision),
            recall: mean(|c| c.recall),
            f1: mean(|c| c.f1),
            per_class,
            confusion,
        }
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], num_classes: usize) -> Self {
        assert_eq!(truth.len(), predicted.len());
        let mut confusion = vec![vec![0; num_classes]; num_classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[t][p] += 1;
        }
        Self::from_confusion(confusion)
    }
}

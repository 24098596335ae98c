use serde::{Deserialize, Serialize};

use super::model::CnnModel;
use crate::imageprep::FaceTensor;
use crate::weaklabel::Gender;

/// Binary confusion counts relative to a chosen positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Gender, Gender)>, positive: Gender) -> Self {
        let mut c = Self::default();
        for (truth, predicted) in pairs {
            match (truth == positive, predicted == positive) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Metrics whose denominator was zero and were reported as 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndefinedMetrics {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
    pub accuracy: bool,
}

impl UndefinedMetrics {
    pub fn any(&self) -> bool {
        self.precision || self.recall || self.f1 || self.accuracy
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub counts: ConfusionCounts,
    pub undefined: UndefinedMetrics,
}

/// Harmonic mean of precision and recall; `None` when both are zero.
pub fn f1_score(precision: f64, recall: f64) -> Option<f64> {
    let s = precision + recall;
    (s > 0.0).then(|| 2.0 * precision * recall / s)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl EvalMetrics {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        let precision = ratio(counts.tp, counts.tp + counts.fp);
        let recall = ratio(counts.tp, counts.tp + counts.fn_);
        let accuracy = ratio(counts.tp + counts.tn, counts.total());
        let f1 = f1_score(precision.unwrap_or(0.0), recall.unwrap_or(0.0));
        Self {
            precision: precision.unwrap_or(0.0),
            recall: recall.unwrap_or(0.0),
            f1: f1.unwrap_or(0.0),
            accuracy: accuracy.unwrap_or(0.0),
            counts,
            undefined: UndefinedMetrics {
                precision: precision.is_none(),
                recall: recall.is_none(),
                f1: f1.is_none(),
                accuracy: accuracy.is_none(),
            },
        }
    }
}

/// Precision, recall, F1 and accuracy of the model on a labeled set.
pub fn evaluate(model: &CnnModel, labeled: &[(FaceTensor, Gender)], positive: Gender) -> EvalMetrics {
    let tensors: Vec<FaceTensor> = labeled.iter().map(|(t, _)| t.clone()).collect();
    let predictions = model.predict_batch(&tensors);
    let counts = ConfusionCounts::from_pairs(
        labeled.iter().zip(&predictions).map(|((_, truth), p)| (*truth, p.gender)),
        positive,
    );
    EvalMetrics::from_counts(counts)
}

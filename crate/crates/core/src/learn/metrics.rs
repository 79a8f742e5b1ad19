use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / (self.tp + self.fp + self.fn_ + self.tn) as f64
    }
}

/// Confusion counts with precision, recall and F1 for the positive class.
/// Undefined ratios (zero denominators) are reported as 0.
pub fn confusion_and_f1(preds: &[u8], labels: &[u8]) -> Result<Metrics> {
    if preds.len() != labels.len() {
        return Err(Error::arg(format!("{} predictions but {} labels", preds.len(), labels.len())));
    }
    if preds.is_empty() {
        return Err(Error::arg("metrics need at least one prediction"));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &l) in preds.iter().zip(labels) {
        match (p != 0, l != 0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    // 2PR / (P + R) rewritten over counts; equals 0 exactly when P + R = 0
    let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
    Ok(Metrics { tp, fp, fn_, tn, precision, recall, f1 })
}

//! Linear SVM trained with Pegasos: projected stochastic subgradient descent
//! on the L2-regularized hinge loss, step size `1 / (lambda · t)`.
//!
//! Inputs are z-normalized with statistics stored in the model, and a
//! constant 1 feature is appended so the bias is learned (and regularized)
//! like any other weight.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { lambda: 1e-3, epochs: 50, seed: 0 }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::arg(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.epochs < 1 {
            return Err(Error::arg("epochs must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub mean: Vec<f64>,
    /// Per-feature standard deviation; 1 for constant features.
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn margin(&self, x: &[f64]) -> f64 {
        let dot: f64 =
            x.iter().zip(&self.mean).zip(&self.scale).zip(&self.weights).map(|(((v, m), s), w)| w * (v - m) / s).sum();
        dot + self.bias
    }

    /// Logistic squash of the margin into `[0, 1]`.
    pub fn score(&self, x: &[f64]) -> f64 {
        1.0 / (1.0 + (-self.margin(x)).exp())
    }
}

pub(crate) fn z_stats(rows: &[Vec<f64>], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

pub fn fit_svm(d: &LabeledDataset, p: &SvmParams) -> Result<LinearSvm> {
    p.validate()?;
    if !d.has_both_classes() {
        return Err(Error::SingleClass("linear SVM needs both classes; the margin is undefined otherwise".into()));
    }
    let dim = d.dim();
    let (mean, scale) = z_stats(&d.rows, dim);
    let xs: Vec<Vec<f64>> = d
        .rows
        .iter()
        .map(|r| {
            let mut z: Vec<f64> = r.iter().zip(&mean).zip(&scale).map(|((v, m), s)| (v - m) / s).collect();
            z.push(1.0);
            z
        })
        .collect();
    let ys: Vec<f64> = d.labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();

    let mut rng = seed::rng(p.seed);
    let mut w = vec![0.0; dim + 1];
    let radius = 1.0 / p.lambda.sqrt();
    let mut order: Vec<usize> = (0..d.len()).collect();
    let mut t = 0u64;
    for _ in 0..p.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (p.lambda * t as f64);
            let x = &xs[i];
            let margin = ys[i] * w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            let shrink = 1.0 - eta * p.lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (v, xv) in w.iter_mut().zip(x) {
                    *v += eta * ys[i] * xv;
                }
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let f = radius / norm;
                w.iter_mut().for_each(|v| *v *= f);
            }
        }
    }
    let bias = w.pop().expect("bias slot");
    Ok(LinearSvm { mean, scale, weights: w, bias })
}

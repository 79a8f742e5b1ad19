//! Early fusion (normalize and concatenate feature streams) and late fusion
//! of per-model scores, by plain averaging or with PSO-optimized weights.

mod pso;

pub use pso::{pso_minimize, PsoOutcome, PsoParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{check_schema, FeatureVector};
use crate::learn::confusion_and_f1;
use crate::learn::svm::z_stats;

pub const FUSION_FORMAT_VERSION: u32 = 1;

/// Non-negative stream weights summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    weights: Vec<f64>,
}

impl FusionWeights {
    pub fn uniform(n: usize) -> Self {
        Self { weights: vec![1.0 / n as f64; n] }
    }

    /// Projects a non-negative raw vector onto the simplex by dividing by its
    /// sum. The all-zero vector maps to uniform weights.
    pub fn normalize(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::arg("need at least one weight"));
        }
        if raw.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::arg("weights must be finite and non-negative"));
        }
        let total: f64 = raw.iter().sum();
        if total == 0.0 {
            return Ok(Self::uniform(raw.len()));
        }
        Ok(Self { weights: raw.iter().map(|w| w / total).collect() })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn late_fuse_average(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::arg("cannot average an empty score list"));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

pub fn late_fuse_weighted(scores: &[f64], w: &FusionWeights) -> Result<f64> {
    if scores.len() != w.len() {
        return Err(Error::arg(format!("{} scores but {} weights", scores.len(), w.len())));
    }
    if w.weights.windows(2).all(|p| p[0] == p[1]) {
        return late_fuse_average(scores);
    }
    let fused: f64 = scores.iter().zip(&w.weights).map(|(s, w)| s * w).sum();
    // rounding can push a convex combination a hair outside its inputs
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(fused.clamp(lo, hi))
}

/// Fuses per-stream score columns row by row.
pub fn fuse_streams(streams: &[Vec<f64>], w: &FusionWeights) -> Result<Vec<f64>> {
    let n = streams.first().map_or(0, Vec::len);
    if streams.iter().any(|s| s.len() != n) {
        return Err(Error::arg("score streams differ in length"));
    }
    let mut row = vec![0.0; streams.len()];
    (0..n)
        .map(|i| {
            for (r, s) in row.iter_mut().zip(streams) {
                *r = s[i];
            }
            late_fuse_weighted(&row, w)
        })
        .collect()
}

fn thresholded(scores: &[f64]) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s >= 0.5)).collect()
}

/// Result of a weight search on validation data.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedWeights {
    pub weights: FusionWeights,
    /// Validation F1 of the returned weights.
    pub f1: f64,
    /// Validation F1 of uniform weights.
    pub uniform_f1: f64,
    /// True when uniform weights were kept because the search did not beat them.
    pub kept_uniform: bool,
    pub trace: Vec<f64>,
}

/// Searches `[0,1]^streams` with PSO for weights maximizing validation F1 at
/// threshold 0.5, then keeps uniform weights unless the search is strictly
/// better.
///
/// F1 is piecewise constant in the weights, so the fitness adds a tie-break:
/// `1 − F1 + ε·brier`, where `brier` is the mean squared error of the fused
/// scores and `ε = 1/(8n²)` is below the smallest possible gap between two
/// distinct F1 values on `n` samples. The F1 ordering is therefore never
/// changed by the tie-break.
pub fn optimize_fusion_weights(val_scores: &[Vec<f64>], val_labels: &[u8], p: &PsoParams) -> Result<OptimizedWeights> {
    if val_scores.len() < 2 {
        return Err(Error::arg("weight optimization needs at least 2 streams"));
    }
    let n = val_labels.len();
    if n == 0 || val_scores.iter().any(|s| s.len() != n) {
        return Err(Error::arg("every stream must have one score per validation label"));
    }
    let positives = val_labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == n {
        return Err(Error::SingleClass("validation labels contain a single class".into()));
    }
    let eps = 1.0 / (8.0 * (n as f64) * (n as f64));
    let fitness = |w: &FusionWeights| -> Result<(f64, f64)> {
        let fused = fuse_streams(val_scores, w)?;
        let f1 = confusion_and_f1(&thresholded(&fused), val_labels)?.f1;
        let brier = fused.iter().zip(val_labels).map(|(s, &l)| (s - f64::from(l)).powi(2)).sum::<f64>() / n as f64;
        Ok((1.0 - f1 + eps * brier, f1))
    };
    let mut failure = None;
    let outcome = pso_minimize(
        |raw| match FusionWeights::normalize(raw).and_then(|w| fitness(&w)) {
            Ok((cost, _)) => cost,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        val_scores.len(),
        0.0,
        1.0,
        p,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let outcome = outcome?;
    let searched = FusionWeights::normalize(&outcome.best)?;
    let uniform = FusionWeights::uniform(val_scores.len());
    let (search_cost, search_f1) = fitness(&searched)?;
    let (uniform_cost, uniform_f1) = fitness(&uniform)?;
    let (weights, f1, kept_uniform) =
        if search_cost < uniform_cost { (searched, search_f1, false) } else { (uniform, uniform_f1, true) };
    Ok(OptimizedWeights { weights, f1, uniform_f1, kept_uniform, trace: outcome.trace })
}

/// Serialized late-fusion weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionDocument {
    pub format_version: u32,
    pub kind: String,
    pub method: String,
    pub streams: Vec<String>,
    pub weights: FusionWeights,
}

impl FusionDocument {
    pub fn new(method: &str, streams: Vec<String>, weights: FusionWeights) -> Self {
        Self {
            format_version: FUSION_FORMAT_VERSION,
            kind: "fusion_weights".into(),
            method: method.into(),
            streams,
            weights,
        }
    }
}

/// Frozen per-stream z-normalization statistics for early fusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamStats {
    pub stream: String,
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyFusionStats {
    pub format_version: u32,
    pub streams: Vec<StreamStats>,
}

impl EarlyFusionStats {
    /// Computes statistics from training vectors only, one entry per stream.
    pub fn fit(streams: &[(&str, &[FeatureVector])]) -> Result<Self> {
        let mut out = Vec::with_capacity(streams.len());
        for &(id, vectors) in streams {
            if out.iter().any(|s: &StreamStats| s.stream == id) {
                return Err(Error::arg(format!("stream {id:?} listed twice")));
            }
            let first = vectors.first().ok_or_else(|| Error::arg(format!("stream {id:?} has no training vectors")))?;
            let names = first.names().to_vec();
            let mut rows = Vec::with_capacity(vectors.len());
            for v in vectors {
                check_schema(&names, v.names())?;
                rows.push(v.values().to_vec());
            }
            let (mean, scale) = z_stats(&rows, names.len());
            out.push(StreamStats { stream: id.to_owned(), names, mean, scale });
        }
        Ok(Self { format_version: FUSION_FORMAT_VERSION, streams: out })
    }

    pub fn fused_names(&self) -> Vec<String> {
        self.streams.iter().flat_map(|s| s.names.iter().map(move |n| format!("{}.{n}", s.stream))).collect()
    }
}

/// Z-normalizes each stream with its frozen statistics and concatenates the
/// results in the statistics' stream order. Names are prefixed `stream.`.
pub fn early_fuse(vectors: &[(&str, &FeatureVector)], stats: &EarlyFusionStats) -> Result<FeatureVector> {
    if let Some((id, _)) = vectors.iter().find(|(id, _)| !stats.streams.iter().any(|s| s.stream == *id)) {
        return Err(Error::arg(format!("unknown stream {id:?}")));
    }
    let mut values = Vec::new();
    for s in &stats.streams {
        let mut found = vectors.iter().filter(|(id, _)| *id == s.stream);
        let (_, v) = found.next().ok_or_else(|| Error::arg(format!("missing stream {:?}", s.stream)))?;
        if found.next().is_some() {
            return Err(Error::arg(format!("stream {:?} supplied twice", s.stream)));
        }
        if v.len() != s.names.len() {
            return Err(Error::arg(format!(
                "stream {:?} has {} features, statistics expect {}",
                s.stream,
                v.len(),
                s.names.len()
            )));
        }
        check_schema(&s.names, v.names())?;
        values.extend(v.values().iter().zip(&s.mean).zip(&s.scale).map(|((x, m), sd)| (x - m) / sd));
    }
    FeatureVector::new(stats.fused_names(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn averaging() {
        assert_eq!(late_fuse_average(&[0.2, 0.8]).unwrap(), 0.5);
        assert_eq!(late_fuse_average(&[0.3]).unwrap(), 0.3);
        assert!(late_fuse_average(&[]).is_err());
    }

    #[test]
    fn weighted() {
        let w = FusionWeights::normalize(&[0.25, 0.75]).unwrap();
        assert!((late_fuse_weighted(&[0.2, 0.8], &w).unwrap() - 0.65).abs() < 1e-15);
        let vertex = FusionWeights::normalize(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(late_fuse_weighted(&[0.1, 0.7, 0.9], &vertex).unwrap(), 0.7);
        assert!(late_fuse_weighted(&[0.1], &vertex).is_err());
        assert_eq!(FusionWeights::normalize(&[0.0, 0.0]).unwrap(), FusionWeights::uniform(2));
    }

    #[test]
    fn pso_monotone_objective_hits_boundary() {
        let out = pso_minimize(|x| x[0], 1, 0.0, 1.0, &PsoParams::default()).unwrap();
        assert!(out.best[0] < 1e-3);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn pso_reports_non_finite() {
        let err = pso_minimize(|x| if x[0] > 0.5 { f64::NAN } else { x[0] }, 1, 0.0, 1.0, &PsoParams::default());
        assert!(matches!(err, Err(Error::NonFinite { .. })));
        assert!(pso_minimize(|x| x[0], 0, 0.0, 1.0, &PsoParams::default()).is_err());
        assert!(pso_minimize(|x| x[0], 1, 1.0, 1.0, &PsoParams::default()).is_err());
    }

    #[test]
    fn identical_streams_keep_single_stream_f1() {
        let s = vec![0.9, 0.2, 0.6, 0.4, 0.7];
        let labels = [1, 0, 0, 1, 1];
        let single = confusion_and_f1(&thresholded(&s), &labels).unwrap().f1;
        let out = optimize_fusion_weights(&[s.clone(), s], &labels, &PsoParams::default()).unwrap();
        assert_eq!(out.f1, single);
    }

    #[test]
    fn weight_search_errors() {
        assert!(optimize_fusion_weights(&[vec![0.1]], &[1], &PsoParams::default()).is_err());
        assert!(matches!(
            optimize_fusion_weights(&[vec![0.1, 0.2], vec![0.3, 0.4]], &[1, 1], &PsoParams::default()),
            Err(Error::SingleClass(_))
        ));
    }

    fn fv(names: &[&str], values: &[f64]) -> FeatureVector {
        FeatureVector::from_pairs(names.iter().copied().zip(values.iter().copied())).unwrap()
    }

    #[test]
    fn early_fusion() {
        let a_train = [fv(&["x", "y", "z"], &[0.0, 1.0, 2.0]), fv(&["x", "y", "z"], &[2.0, 3.0, 2.0])];
        let b_train: Vec<FeatureVector> = (0..3).map(|i| fv(&["p", "q", "r", "s", "t"], &[i as f64; 5])).collect();
        let stats = EarlyFusionStats::fit(&[("a", &a_train), ("b", &b_train)]).unwrap();
        let fused = early_fuse(&[("b", &b_train[1]), ("a", &fv(&["x", "y", "z"], &[1.0, 2.0, 2.0]))], &stats).unwrap();
        assert_eq!(fused.len(), 8);
        assert_eq!(fused.names()[0], "a.x");
        assert!(fused.values().iter().all(|&v| v == 0.0));
        assert!(early_fuse(&[("c", &a_train[0])], &stats).is_err());
        assert!(early_fuse(&[("a", &a_train[0])], &stats).is_err());
        assert!(early_fuse(&[("a", &b_train[0]), ("b", &b_train[0])], &stats).is_err());

        let single = EarlyFusionStats::fit(&[("a", &a_train)]).unwrap();
        let out = early_fuse(&[("a", &a_train[0])], &single).unwrap();
        assert_eq!(out.values(), &[-1.0, -1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn weighted_is_bounded_and_scale_invariant(
            scores in prop::collection::vec(0.0f64..=1.0, 1..6),
            raw in prop::collection::vec(0.0f64..10.0, 6),
            c in 0.01f64..100.0,
        ) {
            let raw = &raw[..scores.len()];
            let w = FusionWeights::normalize(raw).unwrap();
            prop_assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let fused = late_fuse_weighted(&scores, &w).unwrap();
            let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= fused && fused <= hi);
            let uniform = late_fuse_weighted(&scores, &FusionWeights::uniform(scores.len())).unwrap();
            prop_assert_eq!(uniform, late_fuse_average(&scores).unwrap());

            let scaled: Vec<f64> = raw.iter().map(|v| v * c).collect();
            let ws = FusionWeights::normalize(&scaled).unwrap();
            for (a, b) in w.as_slice().iter().zip(ws.as_slice()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

//! City image sequences: per-frame masking, sequential-pair texture
//! comparison, sequence-level decisions and corpus evaluation.
//!
//! Pairs are compared over the pixels valid in *both* frames, so a cloud in
//! one frame removes the same region from its partner and the deltas
//! describe the same ground.

mod manifest;
mod synth;

pub use manifest::{
    load_manifest, parse_manifest, save_corpus, ManifestEntry, SequenceManifest, MANIFEST_FORMAT_VERSION,
};
pub use synth::{generate_synthetic_sequence, SynthConfig, SyntheticTruth};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::learn::{self, confusion_and_f1, LabeledDataset, Metrics, TrainedModel};
use crate::masking::{self, MaskConfig, PixelMask};
use crate::raster::{self, Raster};
use crate::texture::{self, TextureConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct CitySequence {
    pub city_id: String,
    pub frames: Vec<Raster>,
    pub timestamps: Option<Vec<String>>,
    pub label: Option<u8>,
    /// Per-pair ground truth, where known; used only for training.
    pub pair_labels: Option<Vec<u8>>,
}

impl CitySequence {
    /// Checks the ingest invariants: ≥ 2 RGB frames of one size, and
    /// consistent optional per-frame and per-pair annotations.
    pub fn validate(&self) -> Result<()> {
        let id = &self.city_id;
        if self.frames.len() < 2 {
            return Err(Error::data(format!("{id}: a sequence needs at least 2 frames, got {}", self.frames.len())));
        }
        let (w, h) = (self.frames[0].width(), self.frames[0].height());
        for (i, f) in self.frames.iter().enumerate() {
            if f.channels() != 3 {
                return Err(Error::data(format!("{id}: frame {i} is not RGB")));
            }
            if (f.width(), f.height()) != (w, h) {
                return Err(Error::data(format!(
                    "{id}: frame {i} is {}x{}, frame 0 is {w}x{h}",
                    f.width(),
                    f.height()
                )));
            }
        }
        if self.timestamps.as_ref().is_some_and(|t| t.len() != self.frames.len()) {
            return Err(Error::data(format!("{id}: timestamp count differs from frame count")));
        }
        if let Some(p) = &self.pair_labels {
            if p.len() != self.frames.len() - 1 || p.iter().any(|&l| l > 1) {
                return Err(Error::data(format!("{id}: pair_labels needs {} entries of 0|1", self.frames.len() - 1)));
            }
        }
        if self.label.is_some_and(|l| l > 1) {
            return Err(Error::data(format!("{id}: label must be 0 or 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mask: MaskConfig,
    pub texture: TextureConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.mask.validate()?;
        if !(2..=256).contains(&self.texture.levels) {
            return Err(Error::arg(format!("texture levels must lie in 2..=256, got {}", self.texture.levels)));
        }
        if self.texture.offsets.is_empty() {
            return Err(Error::arg("texture needs at least one offset"));
        }
        if self.texture.size == 0 {
            return Err(Error::arg("texture size must be positive"));
        }
        Ok(())
    }
}

/// Working-resolution gray image and validity mask of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameArtifacts {
    pub gray: Raster,
    pub mask: PixelMask,
}

pub fn frame_artifacts(frame: &Raster, cfg: &PipelineConfig) -> Result<FrameArtifacts> {
    let full_gray = raster::to_gray(frame);
    let cloud = masking::cloud_mask(&full_gray, &cfg.mask)?;
    let dark = masking::dark_missing_mask(&full_gray, &cfg.mask)?;
    let s = cfg.texture.size;
    let small = raster::resize_area(frame, s, s)?;
    let cloud = masking::downscale_mask(&cloud, s, s)?;
    let dark = masking::downscale_mask(&dark, s, s)?;
    let sv = masking::sv_mask(&raster::to_hsv(&small)?, &cfg.mask)?;
    let joined = masking::intersect(&[&cloud, &dark, &sv])?;
    let filtered = masking::median_filter(&joined, cfg.mask.median_k)?;
    let mask = masking::dilate_invalid(&filtered, cfg.mask.dilate_k)?;
    Ok(FrameArtifacts { gray: raster::to_gray(&small), mask })
}

/// Texture comparison of one consecutive pair over their shared valid pixels.
pub fn pair_features(a: &FrameArtifacts, b: &FrameArtifacts, cfg: &TextureConfig) -> Result<FeatureVector> {
    let shared = masking::intersect(&[&a.mask, &b.mask])?;
    let describe = |f: &FrameArtifacts| -> Result<FeatureVector> {
        let q = texture::quantize(&f.gray, &shared, cfg.levels)?;
        Ok(texture::haralick(&texture::glcm(&q, &cfg.offsets)?))
    };
    texture::pair_delta(&describe(a)?, &describe(b)?)
}

/// One delta vector per consecutive frame pair (`frames − 1` of them).
pub fn extract_sequence_features(seq: &CitySequence, cfg: &PipelineConfig) -> Result<Vec<FeatureVector>> {
    seq.validate()?;
    cfg.validate()?;
    let artifacts = seq.frames.iter().map(|f| frame_artifacts(f, cfg)).collect::<Result<Vec<_>>>()?;
    artifacts.windows(2).map(|p| pair_features(&p[0], &p[1], &cfg.texture)).collect()
}

/// Names of the per-pair feature vectors, in order.
pub fn pair_feature_names() -> Vec<String> {
    let mut names: Vec<String> = texture::HARALICK_NAMES.iter().map(|n| format!("{n}_delta")).collect();
    names.push(texture::MIN_VALID_FRACTION.into());
    names
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Flooded if any pair scores at or above the threshold.
    #[default]
    Any,
    Mean,
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "any" => Ok(Policy::Any),
            "mean" => Ok(Policy::Mean),
            other => Err(Error::arg(format!("unknown policy {other:?} (any|mean)"))),
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Policy::Any => "any",
            Policy::Mean => "mean",
        })
    }
}

pub fn decide_sequence(pair_scores: &[f64], policy: Policy, threshold: f64) -> Result<u8> {
    if pair_scores.is_empty() {
        return Err(Error::arg("cannot decide a sequence with no pair scores"));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::arg(format!("threshold must lie in [0, 1], got {threshold}")));
    }
    let flooded = match policy {
        Policy::Any => pair_scores.iter().any(|&s| s >= threshold),
        Policy::Mean => pair_scores.iter().sum::<f64>() / pair_scores.len() as f64 >= threshold,
    };
    Ok(u8::from(flooded))
}

/// Pair-level training data: every pair of every sequence, labeled by the
/// sequence's `pair_labels` and grouped by city.
pub fn pair_dataset(sequences: &[CitySequence], cfg: &PipelineConfig) -> Result<LabeledDataset> {
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    let mut groups = Vec::new();
    for seq in sequences {
        let pl = seq
            .pair_labels
            .as_ref()
            .ok_or_else(|| Error::arg(format!("{}: sequence has no pair labels", seq.city_id)))?;
        let feats = extract_sequence_features(seq, cfg)?;
        groups.extend(std::iter::repeat_n(Some(seq.city_id.clone()), feats.len()));
        labels.extend_from_slice(pl);
        vectors.extend(feats);
    }
    let mut d = LabeledDataset::from_vectors(&vectors, labels)?;
    d.groups = groups;
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub features: FeatureVector,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceReport {
    pub city_id: String,
    pub label: u8,
    pub decision: u8,
    pub pairs: Vec<PairReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub policy: Policy,
    pub threshold: f64,
    pub metrics: Metrics,
    pub sequences: Vec<SequenceReport>,
}

impl CorpusReport {
    /// Plain-text report: the headline metrics, then one line per sequence.
    pub fn to_text(&self) -> String {
        let m = &self.metrics;
        let mut out = format!(
            "policy {} threshold {}\nf1 {:.4} precision {:.4} recall {:.4}\ntp {} fp {} fn {} tn {}\n\n",
            self.policy, self.threshold, m.f1, m.precision, m.recall, m.tp, m.fp, m.fn_, m.tn
        );
        out.push_str("city_id\tlabel\tdecision\tmax_score\tmin_coverage\n");
        for s in &self.sequences {
            let max_score = s.pairs.iter().map(|p| p.score).fold(0.0, f64::max);
            let coverage =
                s.pairs.iter().filter_map(|p| p.features.get(texture::MIN_VALID_FRACTION)).fold(1.0, f64::min);
            out.push_str(&format!("{}\t{}\t{}\t{max_score:.4}\t{coverage:.4}\n", s.city_id, s.label, s.decision));
        }
        out
    }
}

pub fn evaluate_corpus(
    sequences: &[CitySequence],
    model: &TrainedModel,
    cfg: &PipelineConfig,
    policy: Policy,
    threshold: f64,
) -> Result<CorpusReport> {
    if let Some(s) = sequences.iter().find(|s| s.label.is_none()) {
        return Err(Error::arg(format!("{}: evaluation needs labeled sequences", s.city_id)));
    }
    let mut reports = Vec::with_capacity(sequences.len());
    for seq in sequences {
        let feats = extract_sequence_features(seq, cfg)?;
        let pairs = feats
            .into_iter()
            .map(|f| Ok(PairReport { score: learn::predict_score(model, &f)?, features: f }))
            .collect::<Result<Vec<_>>>()?;
        let scores: Vec<f64> = pairs.iter().map(|p| p.score).collect();
        let decision = decide_sequence(&scores, policy, threshold)?;
        reports.push(SequenceReport {
            city_id: seq.city_id.clone(),
            label: seq.label.expect("checked"),
            decision,
            pairs,
        });
    }
    let preds: Vec<u8> = reports.iter().map(|r| r.decision).collect();
    let labels: Vec<u8> = reports.iter().map(|r| r.label).collect();
    Ok(CorpusReport { policy, threshold, metrics: confusion_and_f1(&preds, &labels)?, sequences: reports })
}

use serde::{Deserialize, Serialize};

use super::svm::LinearSvm;
use super::tree::DecisionTree;
use crate::error::{Error, Result};
use crate::features::{check_schema, FeatureVector};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tree,
    Forest,
    Svm,
    Ensemble,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
            ModelKind::Svm => "svm",
            ModelKind::Ensemble => "ensemble",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(ModelKind::Tree),
            "forest" => Ok(ModelKind::Forest),
            "svm" => Ok(ModelKind::Svm),
            "ensemble" => Ok(ModelKind::Ensemble),
            other => Err(Error::arg(format!("unknown model kind {other:?} (tree|forest|svm|ensemble)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    Tree(DecisionTree),
    Forest { trees: Vec<DecisionTree> },
    Svm(LinearSvm),
    Ensemble { members: Vec<ModelBody> },
}

impl ModelBody {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelBody::Tree(_) => ModelKind::Tree,
            ModelBody::Forest { .. } => ModelKind::Forest,
            ModelBody::Svm(_) => ModelKind::Svm,
            ModelBody::Ensemble { .. } => ModelKind::Ensemble,
        }
    }

    /// Score of raw feature values already known to match the schema.
    pub fn score_values(&self, x: &[f64]) -> f64 {
        let s = match self {
            ModelBody::Tree(t) => t.score(x),
            ModelBody::Forest { trees } => trees.iter().map(|t| t.score(x)).sum::<f64>() / trees.len() as f64,
            ModelBody::Svm(m) => m.score(x),
            ModelBody::Ensemble { members } => {
                members.iter().map(|m| m.score_values(x)).sum::<f64>() / members.len() as f64
            }
        };
        s.clamp(0.0, 1.0)
    }
}

/// Versioned, serializable classifier producing scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    /// Set when training saw a single class and the model is a constant scorer.
    #[serde(default)]
    pub degenerate: bool,
    pub model: ModelBody,
}

impl TrainedModel {
    pub fn new(feature_names: Vec<String>, model: ModelBody) -> Self {
        Self { format_version: MODEL_FORMAT_VERSION, feature_names, degenerate: false, model }
    }

    /// Single-leaf tree that scores every input as `score`.
    pub fn constant(feature_names: Vec<String>, score: f64) -> Self {
        let mut m = Self::new(feature_names, ModelBody::Tree(DecisionTree::constant(score)));
        m.degenerate = true;
        m
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::data(format!(
                "unsupported model format_version {} (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        Ok(m)
    }
}

/// Score in `[0, 1]`; the hard label is `score >= 0.5`.
pub fn predict_score(m: &TrainedModel, f: &FeatureVector) -> Result<f64> {
    check_schema(&m.feature_names, f.names())?;
    Ok(m.model.score_values(f.values()))
}

pub fn predict_label(m: &TrainedModel, f: &FeatureVector) -> Result<u8> {
    Ok(u8::from(predict_score(m, f)? >= 0.5))
}

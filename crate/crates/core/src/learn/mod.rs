//! From-scratch classifiers, the resampled-ensemble imbalance scheme, and
//! evaluation metrics. Every trainer is deterministic in its seed.

mod dataset;
pub mod ensemble;
pub mod metrics;
pub mod model;
pub mod svm;
pub mod tree;

pub use dataset::LabeledDataset;
pub use ensemble::{resample_member_sets, BaseLearner, EnsembleParams};
pub use metrics::{confusion_and_f1, Metrics};
pub use model::{predict_label, predict_score, ModelBody, ModelKind, TrainedModel};
pub use svm::SvmParams;
pub use tree::{FeatureSubsample, TreeParams};

use crate::error::{Error, Result};

fn require_rows(d: &LabeledDataset) -> Result<()> {
    if d.is_empty() {
        Err(Error::arg("cannot train on an empty dataset"))
    } else {
        Ok(())
    }
}

fn degenerate(d: &LabeledDataset) -> Option<TrainedModel> {
    (!d.has_both_classes()).then(|| TrainedModel::constant(d.names.clone(), d.positives() as f64 / d.len() as f64))
}

/// Single decision tree over all features. A single-class dataset yields a
/// constant model flagged `degenerate`.
pub fn train_tree(d: &LabeledDataset, p: &TreeParams) -> Result<TrainedModel> {
    require_rows(d)?;
    if let Some(m) = degenerate(d) {
        return Ok(m);
    }
    Ok(TrainedModel::new(d.names.clone(), ModelBody::Tree(tree::fit_tree(d, p)?)))
}

pub fn train_forest(d: &LabeledDataset, p: &TreeParams) -> Result<TrainedModel> {
    require_rows(d)?;
    if let Some(mut m) = degenerate(d) {
        m.model =
            ModelBody::Forest { trees: vec![tree::DecisionTree::constant(d.positives() as f64 / d.len() as f64)] };
        return Ok(m);
    }
    Ok(TrainedModel::new(d.names.clone(), ModelBody::Forest { trees: tree::fit_forest(d, p)? }))
}

pub fn train_svm(d: &LabeledDataset, p: &SvmParams) -> Result<TrainedModel> {
    require_rows(d)?;
    Ok(TrainedModel::new(d.names.clone(), ModelBody::Svm(svm::fit_svm(d, p)?)))
}

pub fn train_resampled_ensemble(d: &LabeledDataset, base: &BaseLearner, p: &EnsembleParams) -> Result<TrainedModel> {
    require_rows(d)?;
    Ok(TrainedModel::new(d.names.clone(), ensemble::fit_resampled_ensemble(d, base, p)?))
}

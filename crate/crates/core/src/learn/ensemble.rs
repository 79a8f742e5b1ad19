//! Class-imbalance remedy: `k` members, each trained on every minority row
//! plus a different uniform sample (without replacement) of majority rows.

use std::collections::HashSet;

use rand::seq::index;

use super::model::ModelBody;
use super::svm::{fit_svm, SvmParams};
use super::tree::{fit_forest, fit_tree, TreeParams};
use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub enum BaseLearner {
    Tree(TreeParams),
    Forest(TreeParams),
    Svm(SvmParams),
}

impl BaseLearner {
    fn seed(&self) -> u64 {
        match self {
            BaseLearner::Tree(p) | BaseLearner::Forest(p) => p.seed,
            BaseLearner::Svm(p) => p.seed,
        }
    }

    fn with_seed(&self, seed: u64) -> Self {
        match self {
            BaseLearner::Tree(p) => BaseLearner::Tree(TreeParams { seed, ..p.clone() }),
            BaseLearner::Forest(p) => BaseLearner::Forest(TreeParams { seed, ..p.clone() }),
            BaseLearner::Svm(p) => BaseLearner::Svm(SvmParams { seed, ..p.clone() }),
        }
    }

    pub fn fit(&self, d: &LabeledDataset) -> Result<ModelBody> {
        Ok(match self {
            BaseLearner::Tree(p) => ModelBody::Tree(fit_tree(d, p)?),
            BaseLearner::Forest(p) => ModelBody::Forest { trees: fit_forest(d, p)? },
            BaseLearner::Svm(p) => ModelBody::Svm(fit_svm(d, p)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleParams {
    pub members: usize,
    /// Majority rows per member; `None` means the minority count.
    pub majority_per_member: Option<usize>,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        Self { members: 5, majority_per_member: None }
    }
}

/// The rarer label; label 0 on a tie.
pub fn minority_label(d: &LabeledDataset) -> u8 {
    let pos = d.positives();
    u8::from(pos < d.len() - pos)
}

fn binomial_at_least(n: usize, k: usize, bound: usize) -> bool {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c >= bound as u128 {
            return true;
        }
    }
    c >= bound as u128
}

/// Row indices (sorted) of each member's training set.
pub fn resample_member_sets(d: &LabeledDataset, p: &EnsembleParams, seed: u64) -> Result<Vec<Vec<usize>>> {
    if !d.has_both_classes() {
        return Err(Error::SingleClass("resampled ensemble needs both classes".into()));
    }
    if p.members == 0 {
        return Err(Error::arg("ensemble needs at least one member"));
    }
    let rare = minority_label(d);
    let minority: Vec<usize> = (0..d.len()).filter(|&i| d.labels[i] == rare).collect();
    let majority: Vec<usize> = (0..d.len()).filter(|&i| d.labels[i] != rare).collect();
    let take = p.majority_per_member.unwrap_or(minority.len()).min(majority.len());
    let can_be_distinct = binomial_at_least(majority.len(), take, p.members);
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut sets = Vec::with_capacity(p.members);
    for m in 0..p.members {
        let mut rng = seed::rng(seed::derive_seed(seed, seed::tag_of("resample") ^ m as u64));
        let mut picked;
        let mut attempts = 0;
        loop {
            picked = index::sample(&mut rng, majority.len(), take).into_vec();
            picked.sort_unstable();
            attempts += 1;
            if !can_be_distinct || !seen.contains(&picked) || attempts >= 1000 {
                break;
            }
        }
        seen.insert(picked.clone());
        let mut rows: Vec<usize> = minority.iter().copied().chain(picked.iter().map(|&i| majority[i])).collect();
        rows.sort_unstable();
        sets.push(rows);
    }
    Ok(sets)
}

pub fn fit_resampled_ensemble(d: &LabeledDataset, base: &BaseLearner, p: &EnsembleParams) -> Result<ModelBody> {
    let root = base.seed();
    let sets = resample_member_sets(d, p, root)?;
    let members = sets
        .iter()
        .enumerate()
        .map(|(m, rows)| base.with_seed(seed::derive_seed(root, m as u64)).fit(&d.subset(rows)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelBody::Ensemble { members })
}

//! CART-style binary decision trees (Gini impurity, axis-aligned midpoint
//! thresholds) and bootstrap random forests built from them.

use std::cmp::Ordering;

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::seed;

/// How many features a forest split may look at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FeatureSubsample {
    All,
    /// `ceil(sqrt(d))` features.
    Sqrt,
    /// `ceil(fraction · d)` features, at least one.
    Fraction(f64),
}

impl FeatureSubsample {
    pub fn resolve(self, dim: usize) -> usize {
        let k = match self {
            FeatureSubsample::All => dim,
            FeatureSubsample::Sqrt => (dim as f64).sqrt().ceil() as usize,
            FeatureSubsample::Fraction(f) => (f * dim as f64).ceil() as usize,
        };
        k.clamp(1, dim.max(1))
    }
}

impl std::fmt::Display for FeatureSubsample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureSubsample::All => f.write_str("all"),
            FeatureSubsample::Sqrt => f.write_str("sqrt"),
            FeatureSubsample::Fraction(x) => write!(f, "{x}"),
        }
    }
}

impl std::str::FromStr for FeatureSubsample {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(FeatureSubsample::All),
            "sqrt" => Ok(FeatureSubsample::Sqrt),
            other => match other.parse::<f64>() {
                Ok(f) if f > 0.0 && f <= 1.0 => Ok(FeatureSubsample::Fraction(f)),
                _ => Err(Error::arg(format!(
                    "feature_subsample must be all, sqrt or a fraction in (0,1], got {other:?}"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub n_trees: usize,
    pub feature_subsample: FeatureSubsample,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: 8, min_leaf: 2, n_trees: 100, feature_subsample: FeatureSubsample::Sqrt, seed: 0 }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 || self.min_leaf < 1 || self.n_trees < 1 {
            return Err(Error::arg("tree parameters require max_depth >= 1, min_leaf >= 1, n_trees >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        score: f64,
    },
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn constant(score: f64) -> Self {
        Self { nodes: vec![Node::Leaf { score }] }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { score } => return score,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

fn gini(n: usize, pos: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Grower<'a> {
    data: &'a LabeledDataset,
    max_depth: usize,
    min_leaf: usize,
    max_features: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    child_impurity: f64,
}

impl Grower<'_> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let n = rows.len();
        let pos = rows.iter().filter(|&&r| self.data.labels[r] == 1).count();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { score: pos as f64 / n as f64 });
        if depth >= self.max_depth || pos == 0 || pos == n || n < 2 * self.min_leaf {
            return id;
        }
        let Some(best) = self.best_split(rows) else {
            return id;
        };
        let mid = partition(rows, |r| self.data.rows[r][best.feature] <= best.threshold);
        let (left_rows, right_rows) = rows.split_at_mut(mid);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
        id
    }

    fn best_split(&mut self, rows: &[usize]) -> Option<SplitChoice> {
        let dim = self.data.dim();
        let candidates: Vec<usize> = if self.max_features >= dim {
            (0..dim).collect()
        } else {
            let mut c = index::sample(&mut self.rng, dim, self.max_features).into_vec();
            c.sort_unstable();
            c
        };
        let n = rows.len();
        let mut best: Option<SplitChoice> = None;
        let mut sorted = rows.to_vec();
        for f in candidates {
            let col = |r: usize| self.data.rows[r][f];
            sorted.sort_by(|&a, &b| col(a).total_cmp(&col(b)).then(a.cmp(&b)));
            let total_pos = sorted.iter().filter(|&&r| self.data.labels[r] == 1).count();
            let mut left_pos = 0;
            for k in 0..n - 1 {
                left_pos += usize::from(self.data.labels[sorted[k]]);
                let nl = k + 1;
                let nr = n - nl;
                if nl < self.min_leaf || nr < self.min_leaf {
                    continue;
                }
                let (a, b) = (col(sorted[k]), col(sorted[k + 1]));
                if a.total_cmp(&b) != Ordering::Less {
                    continue;
                }
                let impurity = (nl as f64 * gini(nl, left_pos) + nr as f64 * gini(nr, total_pos - left_pos)) / n as f64;
                if best.as_ref().is_none_or(|s| impurity < s.child_impurity) {
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(SplitChoice { feature: f, threshold, child_impurity: impurity });
                }
            }
        }
        best
    }
}

/// Stable in-place partition; returns the count of rows satisfying `pred`.
fn partition(rows: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| pred(r));
    let mid = yes.len();
    for (slot, r) in rows.iter_mut().zip(yes.into_iter().chain(no)) {
        *slot = r;
    }
    mid
}

pub(crate) fn grow_tree(
    data: &LabeledDataset,
    rows: &mut [usize],
    p: &TreeParams,
    max_features: usize,
    seed: u64,
) -> DecisionTree {
    let mut g = Grower {
        data,
        max_depth: p.max_depth,
        min_leaf: p.min_leaf,
        max_features,
        rng: seed::rng(seed),
        nodes: Vec::new(),
    };
    g.grow(rows, 0);
    DecisionTree { nodes: g.nodes }
}

/// Single greedy tree over all features.
pub fn fit_tree(d: &LabeledDataset, p: &TreeParams) -> Result<DecisionTree> {
    p.validate()?;
    if d.is_empty() {
        return Err(Error::arg("cannot train on an empty dataset"));
    }
    let mut rows: Vec<usize> = (0..d.len()).collect();
    Ok(grow_tree(d, &mut rows, p, d.dim(), p.seed))
}

/// `n_trees` trees, each on a bootstrap sample with per-split feature subsets.
pub fn fit_forest(d: &LabeledDataset, p: &TreeParams) -> Result<Vec<DecisionTree>> {
    p.validate()?;
    if d.is_empty() {
        return Err(Error::arg("cannot train on an empty dataset"));
    }
    let max_features = p.feature_subsample.resolve(d.dim());
    let trees = (0..p.n_trees)
        .map(|t| {
            let tree_seed = seed::derive_seed(p.seed, t as u64);
            let mut rng = seed::rng(seed::derive_seed(tree_seed, seed::tag_of("bootstrap")));
            let mut rows: Vec<usize> = (0..d.len()).map(|_| rng.gen_range(0..d.len())).collect();
            grow_tree(d, &mut rows, p, max_features, tree_seed)
        })
        .collect();
    Ok(trees)
}

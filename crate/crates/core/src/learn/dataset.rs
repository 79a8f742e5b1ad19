use crate::error::{Error, Result};
use crate::features::{check_schema, FeatureTable, FeatureVector};

/// Rows of features with binary labels and an optional group id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub groups: Vec<Option<String>>,
}

impl LabeledDataset {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::arg(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != names.len()) {
            return Err(Error::arg(format!("row {r} has {} values, expected {}", rows[r].len(), names.len())));
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::arg(format!("labels must be 0 or 1, got {l}")));
        }
        let groups = vec![None; rows.len()];
        Ok(Self { names, rows, labels, groups })
    }

    pub fn from_vectors(vectors: &[FeatureVector], labels: Vec<u8>) -> Result<Self> {
        let names = vectors.first().map(|v| v.names().to_vec()).unwrap_or_default();
        let mut rows = Vec::with_capacity(vectors.len());
        for v in vectors {
            check_schema(&names, v.names())?;
            rows.push(v.values().to_vec());
        }
        Self::new(names, rows, labels)
    }

    pub fn from_table(t: &FeatureTable) -> Result<Self> {
        let labels = t.labels.clone().ok_or_else(|| Error::data("feature table has no label column"))?;
        let mut d = Self::new(t.names.clone(), t.rows.clone(), labels)?;
        if let Some(g) = &t.groups {
            d.groups = g.iter().cloned().map(Some).collect();
        }
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.positives();
        p > 0 && p < self.len()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            names: self.names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            groups: indices.iter().map(|&i| self.groups[i].clone()).collect(),
        }
    }

    pub fn vector(&self, i: usize) -> FeatureVector {
        FeatureVector::new(self.names.clone(), self.rows[i].clone()).expect("dataset rows are valid vectors")
    }
}

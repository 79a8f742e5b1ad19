//! Bag-of-words text features: tokenization, vocabulary, count/tf-idf vectors.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

pub const VOCAB_FORMAT_VERSION: u32 = 1;

fn punctuation() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\p{P}").expect("valid pattern"))
}

/// Lowercases, splits on whitespace and removes every Unicode punctuation
/// character, dropping tokens left empty.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| punctuation().replace_all(&t.to_lowercase(), "").into_owned())
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub format_version: u32,
    pub terms: Vec<String>,
    pub doc_freq: Vec<usize>,
    pub n_docs: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn with_index(mut self) -> Self {
        self.index = self.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        self
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("vocabulary serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Self = serde_json::from_str(text)?;
        if v.format_version != VOCAB_FORMAT_VERSION {
            return Err(Error::data(format!("unsupported vocabulary format_version {}", v.format_version)));
        }
        if v.terms.len() != v.doc_freq.len() {
            return Err(Error::data("vocabulary terms and doc_freq differ in length"));
        }
        Ok(v.with_index())
    }
}

/// Terms with document frequency ≥ `min_doc_freq`, ordered by document
/// frequency (descending) then lexicographically, truncated to `max_terms`.
pub fn build_vocab(corpus: &[Vec<String>], max_terms: usize, min_doc_freq: usize) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::arg("cannot build a vocabulary from an empty corpus"));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus {
        let unique: HashSet<&str> = doc.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = df.into_iter().filter(|&(_, n)| n >= min_doc_freq.max(1)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.truncate(max_terms);
    let (terms, doc_freq) = ranked.into_iter().map(|(t, n)| (t.to_owned(), n)).unzip();
    Ok(Vocabulary {
        format_version: VOCAB_FORMAT_VERSION,
        terms,
        doc_freq,
        n_docs: corpus.len(),
        index: HashMap::new(),
    }
    .with_index())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Count,
    Tfidf,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "count" => Ok(Weighting::Count),
            "tfidf" => Ok(Weighting::Tfidf),
            other => Err(Error::arg(format!("unknown weighting {other:?} (count|tfidf)"))),
        }
    }
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Weighting::Count => "count",
            Weighting::Tfidf => "tfidf",
        })
    }
}

/// Feature names for vectors over `v`: `bow:<term>`.
pub fn feature_names(v: &Vocabulary) -> Vec<String> {
    v.terms.iter().map(|t| format!("bow:{t}")).collect()
}

/// One dimension per vocabulary term. Tf-idf weight is
/// `count · ln((1 + n_docs) / (1 + doc_freq))`, with no further normalization.
pub fn vectorize(tokens: &[String], v: &Vocabulary, scheme: Weighting) -> FeatureVector {
    let mut counts = vec![0.0; v.len()];
    for t in tokens {
        if let Some(i) = v.position(t) {
            counts[i] += 1.0;
        }
    }
    if scheme == Weighting::Tfidf {
        for (c, &df) in counts.iter_mut().zip(&v.doc_freq) {
            *c *= ((1 + v.n_docs) as f64 / (1 + df) as f64).ln();
        }
    }
    FeatureVector::new(feature_names(v), counts).expect("terms are unique")
}

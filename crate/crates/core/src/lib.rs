//! Flood detection in satellite image sequences and the classifier tooling
//! around it: masking, GLCM texture, tree/SVM learners, score fusion, and
//! bag-of-words and body-keypoint flood-level helpers.

// `!(x >= 0.0)` is how parameter checks reject NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod features;
pub mod masking;
pub mod raster;
pub mod texture;

pub use error::{Error, Result};
pub use features::{FeatureTable, FeatureVector};
pub mod cli;
pub mod fusion;
pub mod learn;
pub mod poserule;
pub mod seed;
pub mod sequence;
pub mod textbow;

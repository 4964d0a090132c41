//! Statistical shape analysis of cell contours.
//!
//! The pipeline runs from instance label maps (or synthetic contours) through
//! registration, descriptor extraction and gradient-boosted-tree
//! classification:
//!
//! 1. [`contour_io`] traces label maps and reads/writes contour files.
//! 2. [`preprocess`] resamples, orients, normalizes and Procrustes-aligns.
//! 3. [`descriptors`] and [`pca`] turn registered contours into feature rows.
//! 4. [`gbt`] trains a softmax boosted-tree classifier.
//! 5. [`evalharness`] runs cross-validated family comparisons.
//!
//! [`synthgen`] produces the labelled synthetic training set.

// `!(x > 0.0)` is the idiom used to reject NaN together with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contour_io;
pub mod descriptors;
pub mod error;
pub mod evalharness;
pub mod features;
pub mod gbt;
pub mod geometry;
pub mod pca;
pub mod preprocess;
pub mod rng;
pub mod synthgen;

pub use contour_io::{Contour, LabelMap, ShapeClass};
pub use error::{Error, Result};
pub use features::{FeatureMatrix, FeatureVector};

/// A 2D point `[x, y]`.
pub type Point = [f64; 2];

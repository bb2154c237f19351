//! Cluster-guarded, label-specific minority oversampling for imbalanced
//! multi-label data, with the evaluation harness around it.
//!
//! The pipeline, per label of a multi-label dataset:
//!
//! 1. [`clustering::kmeans`] partitions the input space once, ignoring labels.
//! 2. [`oversample::uclso_augment`] adds synthetic minority points inside each
//!    cluster, in proportion to the minority points the cluster already holds.
//! 3. [`classifier::train_linear`] fits one linear SVM on the augmented rows.
//!
//! [`eval::run_cv`] wraps this in repeated k-fold cross-validation and
//! [`eval::friedman`] compares methods across datasets.
//!
//! ```
//! use uclso::data::{generate_toy, ToyConfig};
//! use uclso::oversample::{augment_all, OversampleConfig};
//!
//! let ds = generate_toy(&ToyConfig::two_label_demo(7)).unwrap();
//! let (clusters, augmented) = augment_all(&ds, &OversampleConfig::default()).unwrap();
//! assert_eq!(clusters.unwrap().k, 5);
//! for a in augmented {
//!     let a = a.unwrap();
//!     assert!(a.augmented_minority() >= a.n_majority);
//! }
//! ```

pub mod classifier;
pub mod clustering;
pub mod data;
mod error;
pub mod eval;
pub mod oversample;
pub mod rng;

pub use error::{Error, Result};

// The guide under `book/` is compiled here so its snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/clustering.md")]
    mod clustering {}
    #[doc = include_str!("../../../book/src/oversampling.md")]
    mod oversampling {}
    #[doc = include_str!("../../../book/src/classifiers.md")]
    mod classifiers {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

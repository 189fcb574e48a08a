//! Lexical three-class text classification: surface n-gram features, a
//! linear SVM trained by dual coordinate descent, and a deterministic
//! cross-validation harness.
//!
//! The pipeline is corpus -> features -> classifier -> evaluation:
//!
//! - [`corpus`]: CSV loading, text normalization, stratified folds, the
//!   majority baseline and a synthetic corpus generator for tests.
//! - [`features`]: character n-grams, word n-grams and skip word bigrams,
//!   a frozen vocabulary and sparse unit-normalized count vectors.
//! - [`svm`]: L2-regularized L1-loss dual coordinate descent with a
//!   one-vs-rest reduction over the three classes.
//! - [`eval`]: k-fold cross-validation, confusion matrices, the
//!   multi-system oracle bound, learning curves and feature rankings.
//!
//! Every randomized step (fold assignment, epoch ordering, subsampling)
//! derives from one `u64` seed, so equal inputs give byte-identical
//! reports. Numeric code is generic over [`scalar::Scalar`] (`f32` or
//! `f64`); the `*64` aliases below pick the default double precision.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
mod rng;
pub mod scalar;
pub mod svm;

pub use corpus::{Corpus, FoldAssignment, Label, LabeledInstance};
pub use error::Error;
pub use eval::{EvaluationReport, Hyperparams, LearningCurve, PredictionRecord};
pub use features::{FeatureSpec, SparseVector, Vocabulary};
pub use scalar::Scalar;
pub use svm::{LinearModel, TrainingParams, TrainingProblem};

pub type Result<T> = std::result::Result<T, Error>;

/// Double-precision sparse vector.
pub type SparseVector64 = features::SparseVector<f64>;
/// Double-precision linear model.
pub type LinearModel64 = svm::LinearModel<f64>;
/// Double-precision training problem.
pub type TrainingProblem64 = svm::TrainingProblem<f64>;

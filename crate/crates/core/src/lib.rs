//! Automatic misogyny identification for English tweets.
//!
//! The crate covers the whole offline pipeline: reading AMI-style TSV
//! corpora, normalising tweets into stemmed token sequences, building
//! concatenated `[TF-IDF | averaged word vectors | sentence embedding]`
//! feature vectors, training logistic regression and gradient boosted
//! trees, and scoring Task A (misogyny, accuracy) and Task B (category and
//! target, averaged macro-F1).

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod models;
pub mod pipeline;
pub mod preprocess;

pub use corpus::{Category, Dataset, LabeledTweet, LoadMode, Prediction, Target};
pub use error::{Error, Result};
pub use evaluation::{ConfusionMatrix, ScoreReport};
pub use features::{BlockKind, FeatureMatrix, FeatureVector, Layout};
pub use models::{GbdtConfig, GbdtModel, LinearModel, LrConfig, MulticlassModel};
pub use pipeline::{PredictionRecord, RunConfig, SystemSettings, Task, TrainedSystem};
pub use preprocess::{PreprocessConfig, TokenSequence};

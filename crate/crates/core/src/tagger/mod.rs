//! The biGRU-CRF tagger and its hybrid variant.
//!
//! Per token the model concatenates a word embedding, a char-CNN vector and,
//! when enabled, two dimension-5 categorical feature embeddings (the
//! terminology system's IOB prediction and the last-section-heading class).
//! The sequence runs through a bidirectional GRU, a linear projection to
//! 2k+1 emission scores, and a linear-chain CRF with IOB-masked transitions.

mod config;
mod embeddings;
mod model;
mod persist;
mod search;
mod train;
mod vocab;

pub use config::TaggerConfig;
pub use embeddings::load_embeddings_text;
pub use model::{featurize_document, FeatSentence, TaggerModel};
pub use persist::{load_model, save_model, FORMAT_VERSION};
pub use search::{random_search, SearchSpace, TrialResult};
pub use train::{
    prepare_doc, train, train_with_mean_epoch, MeanEpochReport, PreparedDoc, TrainReport,
};
pub use vocab::Vocab;

use crate::annotation::AnnotationError;
use crate::crf::CrfError;
use crate::nn::NnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("feature/config mismatch: {0}")]
    FeatureConfigMismatch(String),
    #[error("no training data")]
    NoTrainingData,
    #[error("early stopping requires a non-empty dev set (or set fixed_epochs)")]
    NoDevSet,
    #[error("mean-epoch training requires at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("model container format version {found} (expected {expected})")]
    FormatVersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model container: {0}")]
    CorruptContainer(String),
    #[error("feature alignment: {0}")]
    Alignment(#[from] AnnotationError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Crf(#[from] CrfError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("embedding file: {0}")]
    EmbeddingFile(String),
}

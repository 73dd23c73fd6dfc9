//! Clinical named-entity recognition toolkit.
//!
//! Three systems for detecting typed entity mentions in clinical text, plus
//! the evaluation machinery to compare them:
//!
//! - a **terminology-based annotator** ([`gazetteer`]) that compiles typed
//!   term lists into a normalized token-level matching automaton,
//! - a **biGRU-CRF tagger** ([`tagger`], [`nn`], [`crf`]) trained on IOB tag
//!   sequences with exact analytic gradients,
//! - a **hybrid tagger** that feeds the terminology predictions and
//!   section-heading context ([`sections`]) to the neural model as
//!   categorical feature embeddings.
//!
//! [`eval`] implements exact- and partial-match scoring, inter-annotator
//! agreement, stratified cross-validation and multi-seed aggregation; and
//! [`synth`] generates seeded synthetic corpora so every experiment is
//! reproducible without access to restricted clinical data.
//!
//! Start with the runnable examples:
//!
//! ```text
//! cargo run --release --example tokenize_and_tag
//! cargo run --release --example gazetteer_annotate
//! cargo run --release --example crf_inference
//! cargo run --release --example gradient_check
//! cargo run --release --example train_small_tagger
//! cargo run --release --example hybrid_features
//! cargo run --release --example evaluate_predictions
//! cargo run --release --example synthetic_corpus
//! cargo run --release --example cross_validation
//! ```
//!
//! The `cner` binary exposes the same pipelines as subcommands
//! (`tokenize`, `dict-annotate`, `synth`, `train`, `predict`, `evaluate`,
//! `agree`, `crossval`, `search`, `gradcheck`, `experiment`).

pub mod annotation;
pub mod corpus;
pub mod crf;
pub mod eval;
pub mod experiment;
pub mod gazetteer;
pub mod nn;
pub mod sections;
pub mod synth;
pub mod tagger;
pub mod text;
pub mod verify;

pub use annotation::{EntityMention, EntityTypeSet, Tag};
pub use text::{NormPolicy, RawDocument, Token, TokenizedDocument};

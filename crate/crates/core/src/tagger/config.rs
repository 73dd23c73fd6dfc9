//! Tagger hyperparameters.

use super::TaggerError;
use serde::{Deserialize, Serialize};

/// Dimension of the categorical feature embeddings (gazetteer IOB class and
/// section class).
pub const FEATURE_DIM: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaggerConfig {
    pub word_dim: usize,
    pub char_emb_dim: usize,
    /// Number of char-CNN filters (the char vector dimension).
    pub char_filters: usize,
    pub hidden_dim: usize,
    pub num_gru_layers: usize,
    pub dropout_rate: f64,
    pub l2_lambda: f64,
    pub lr: f64,
    pub max_epochs: usize,
    /// Consecutive non-improving dev epochs tolerated before stopping.
    pub patience: usize,
    /// When set, train exactly this many epochs with no dev evaluation.
    pub fixed_epochs: Option<usize>,
    pub seed: u64,
    pub use_gazetteer_feature: bool,
    pub use_section_feature: bool,
    /// Always 5; kept in the config file for completeness.
    pub feature_dim: usize,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            word_dim: 100,
            char_emb_dim: 30,
            char_filters: 30,
            hidden_dim: 100,
            num_gru_layers: 1,
            dropout_rate: 0.5,
            l2_lambda: 1e-6,
            lr: 1e-3,
            max_epochs: 100,
            patience: 5,
            fixed_epochs: None,
            seed: 0,
            use_gazetteer_feature: false,
            use_section_feature: false,
            feature_dim: FEATURE_DIM,
        }
    }
}

impl TaggerConfig {
    /// Desk-scale dimensions used by the synthetic experiments.
    pub fn small() -> Self {
        TaggerConfig {
            word_dim: 25,
            char_emb_dim: 10,
            char_filters: 15,
            hidden_dim: 50,
            max_epochs: 50,
            ..Default::default()
        }
    }

    /// Hybrid variant of this config (both categorical features enabled).
    pub fn hybrid(mut self) -> Self {
        self.use_gazetteer_feature = true;
        self.use_section_feature = true;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), TaggerError> {
        let positive = [
            ("word_dim", self.word_dim),
            ("char_emb_dim", self.char_emb_dim),
            ("char_filters", self.char_filters),
            ("hidden_dim", self.hidden_dim),
            ("num_gru_layers", self.num_gru_layers),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(TaggerError::InvalidConfig(format!(
                    "{name} must be positive"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(TaggerError::InvalidConfig(format!(
                "dropout_rate {} outside [0,1)",
                self.dropout_rate
            )));
        }
        if self.feature_dim != FEATURE_DIM
            && (self.use_gazetteer_feature || self.use_section_feature)
        {
            return Err(TaggerError::InvalidConfig(format!(
                "feature_dim is fixed at {FEATURE_DIM}"
            )));
        }
        if self.lr <= 0.0 || self.l2_lambda < 0.0 {
            return Err(TaggerError::InvalidConfig(
                "lr/l2_lambda out of range".into(),
            ));
        }
        Ok(())
    }
}

//! Seeded random hyperparameter search scored by cross-validated exact-F.

use super::model::TaggerModel;
use super::train::{train, PreparedDoc};
use super::vocab::Vocab;
use super::{TaggerConfig, TaggerError};
use crate::annotation::EntityTypeSet;
use crate::eval::{evaluate, FoldSplit};
use crate::sections::SectionClasses;
use crate::text::TokenizedDocument;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Candidate values per axis; every trial samples one value from each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub hidden_dims: Vec<usize>,
    pub num_gru_layers: Vec<usize>,
    pub char_emb_dims: Vec<usize>,
    pub char_filters: Vec<usize>,
    pub lrs: Vec<f64>,
    pub l2_lambdas: Vec<f64>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            hidden_dims: vec![25, 50, 100],
            num_gru_layers: vec![1, 2],
            char_emb_dims: vec![10, 25],
            char_filters: vec![15, 30],
            lrs: vec![3e-4, 1e-3, 3e-3],
            l2_lambdas: vec![0.0, 1e-6, 1e-4],
        }
    }
}

impl SearchSpace {
    fn sample(&self, base: &TaggerConfig, rng: &mut ChaCha8Rng) -> TaggerConfig {
        let pick = |v: &[usize], rng: &mut ChaCha8Rng| v[rng.gen_range(0..v.len())];
        let pickf = |v: &[f64], rng: &mut ChaCha8Rng| v[rng.gen_range(0..v.len())];
        TaggerConfig {
            hidden_dim: pick(&self.hidden_dims, rng),
            num_gru_layers: pick(&self.num_gru_layers, rng),
            char_emb_dim: pick(&self.char_emb_dims, rng),
            char_filters: pick(&self.char_filters, rng),
            lr: pickf(&self.lrs, rng),
            l2_lambda: pickf(&self.l2_lambdas, rng),
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub config: TaggerConfig,
    pub cv_exact_f: f64,
}

/// Sample `budget` configs uniformly from the space and score each by
/// k-fold cross-validation (train on the complement with the held-out fold
/// as dev set, pool predictions, exact micro-F). Returns the best config and
/// the full trial log.
#[allow(clippy::too_many_arguments)]
pub fn random_search(
    space: &SearchSpace,
    base: &TaggerConfig,
    docs: &[PreparedDoc],
    split: &FoldSplit,
    types: &EntityTypeSet,
    section_classes: &SectionClasses,
    budget: usize,
    seed: u64,
) -> Result<(TaggerConfig, Vec<TrialResult>), TaggerError> {
    assert!(budget >= 1, "budget must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let by_id: BTreeMap<&str, &PreparedDoc> = docs.iter().map(|d| (d.id(), d)).collect();

    let mut trials = Vec::with_capacity(budget);
    for _ in 0..budget {
        let config = space.sample(base, &mut rng);
        let mut gold = BTreeMap::new();
        let mut pred = BTreeMap::new();
        for fold in 0..split.k {
            let train_docs: Vec<PreparedDoc> = split
                .doc_ids_outside_fold(fold)
                .iter()
                .filter_map(|id| by_id.get(id).map(|d| (*d).clone()))
                .collect();
            let test_docs: Vec<PreparedDoc> = split
                .doc_ids_in_fold(fold)
                .iter()
                .filter_map(|id| by_id.get(id).map(|d| (*d).clone()))
                .collect();
            let tdocs: Vec<&TokenizedDocument> = train_docs.iter().map(|d| &d.tdoc).collect();
            let vocab = Vocab::build(&tdocs);
            let mut model = TaggerModel::new(
                config.clone(),
                types.clone(),
                section_classes.clone(),
                vocab,
            )?;
            train(&mut model, &train_docs, &test_docs)?;
            for doc in &test_docs {
                let p = model.predict(&doc.tdoc, doc.gaz.as_deref(), doc.sections.as_deref())?;
                gold.insert(doc.id().to_string(), doc.gold.clone());
                pred.insert(doc.id().to_string(), p);
            }
        }
        let report = evaluate(&gold, &pred, types)
            .map_err(|e| TaggerError::FeatureConfigMismatch(e.to_string()))?;
        trials.push(TrialResult {
            config,
            cv_exact_f: report.micro.exact.f1,
        });
    }

    let best = trials
        .iter()
        .max_by(|a, b| a.cv_exact_f.partial_cmp(&b.cv_exact_f).unwrap())
        .expect("budget >= 1")
        .config
        .clone();
    Ok((best, trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic_under_seed() {
        let space = SearchSpace::default();
        let base = TaggerConfig::small();
        let draw = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5)
                .map(|_| space.sample(&base, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn sampled_configs_come_from_the_space() {
        let space = SearchSpace {
            hidden_dims: vec![7],
            num_gru_layers: vec![1],
            char_emb_dims: vec![5],
            char_filters: vec![6],
            lrs: vec![0.01],
            l2_lambdas: vec![0.0],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = space.sample(&TaggerConfig::small(), &mut rng);
        assert_eq!(cfg.hidden_dim, 7);
        assert_eq!(cfg.char_emb_dim, 5);
        assert_eq!(cfg.lr, 0.01);
    }
}

//! Stratified fold splitting and entity-count subsampling.

use super::EvalError;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Document metadata used for stratification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMeta {
    pub id: String,
    pub doc_type: String,
    pub n_tokens: usize,
}

/// Assignment of every document to one fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub k: usize,
    assignment: BTreeMap<String, usize>,
}

impl FoldSplit {
    pub fn fold_of(&self, doc_id: &str) -> Option<usize> {
        self.assignment.get(doc_id).copied()
    }

    pub fn doc_ids_in_fold(&self, fold: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn doc_ids_outside_fold(&self, fold: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, &f)| f != fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &usize)> {
        self.assignment.iter()
    }
}

/// Stratified k-fold split: documents are grouped by type, sorted by token
/// length within each group, and dealt round-robin to folds from a seeded
/// starting offset. Fold sizes within a group differ by at most one, and
/// sorting by length before dealing balances lengths across folds.
pub fn stratified_folds(docs: &[DocMeta], k: usize, seed: u64) -> Result<FoldSplit, EvalError> {
    if k < 2 || docs.len() < k {
        return Err(EvalError::TooFewDocuments {
            need: k.max(2),
            k,
            got: docs.len(),
        });
    }
    let mut groups: BTreeMap<&str, Vec<&DocMeta>> = BTreeMap::new();
    for d in docs {
        groups.entry(&d.doc_type).or_default().push(d);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = BTreeMap::new();
    for group in groups.values_mut() {
        group.sort_by(|a, b| (a.n_tokens, &a.id).cmp(&(b.n_tokens, &b.id)));
        let offset = rng.gen_range(0..k);
        for (pos, doc) in group.iter().enumerate() {
            assignment.insert(doc.id.clone(), (offset + pos) % k);
        }
    }
    Ok(FoldSplit { k, assignment })
}

/// Seeded random permutation of the documents, then take documents until the
/// cumulative entity count first reaches `target`. Returns selected document
/// ids in permuted order.
pub fn subsample_to_entity_count(
    doc_entity_counts: &[(String, usize)],
    target: usize,
    seed: u64,
) -> Result<Vec<String>, EvalError> {
    let total: usize = doc_entity_counts.iter().map(|(_, c)| c).sum();
    if target > total {
        return Err(EvalError::TargetTooLarge { target, total });
    }
    if target == 0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..doc_entity_counts.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut selected = Vec::new();
    let mut cumulative = 0;
    for idx in order {
        selected.push(doc_entity_counts[idx].0.clone());
        cumulative += doc_entity_counts[idx].1;
        if cumulative >= target {
            break;
        }
    }
    Ok(selected)
}

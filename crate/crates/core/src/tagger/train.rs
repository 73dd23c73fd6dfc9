//! Training: SGD over sentences with Adam, early stopping on dev exact-F,
//! best-epoch restoration, and cross-validated mean-epoch training.

use super::model::{featurize_document, FeatSentence, TaggerModel};
use super::TaggerError;
use crate::annotation::{encode_document, EntityMention};
use crate::eval::{evaluate, FoldSplit};
use crate::gazetteer::{ConflictPolicy, MatcherAutomaton};
use crate::nn::{adam_step, derive_rng, l2_grad_accumulate, l2_penalty, AdamConfig, AdamState};
use crate::sections::{assign_section_feature, detect_headings, HeadingLexicon};
use crate::text::TokenizedDocument;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

/// A document with everything the tagger needs: gold mentions plus the
/// hybrid features (present only when the model consumes them).
#[derive(Debug, Clone)]
pub struct PreparedDoc {
    pub tdoc: TokenizedDocument,
    pub gold: Vec<EntityMention>,
    pub gaz: Option<Vec<EntityMention>>,
    pub sections: Option<Vec<Vec<usize>>>,
}

impl PreparedDoc {
    pub fn id(&self) -> &str {
        &self.tdoc.doc.id
    }
}

/// Attach hybrid features to a document by running the terminology system
/// and the heading detector. Gazetteer features come from the matcher's
/// predictions, never from gold annotations.
pub fn prepare_doc(
    tdoc: TokenizedDocument,
    gold: Vec<EntityMention>,
    matcher: Option<&MatcherAutomaton>,
    headings: Option<&HeadingLexicon>,
) -> PreparedDoc {
    let gaz = matcher.map(|m| m.annotate(&tdoc, ConflictPolicy::Deterministic));
    let sections = headings.map(|lex| {
        let found = detect_headings(&tdoc, lex);
        assign_section_feature(&tdoc, &found)
    });
    PreparedDoc {
        tdoc,
        gold,
        gaz,
        sections,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_train_loss: Vec<f64>,
    /// Dev exact micro-F per epoch; empty when training with fixed epochs.
    pub epoch_dev_f: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_epoch: usize,
    pub wall_ms: u128,
}

struct TrainSentence {
    feat: FeatSentence,
    gold_labels: Vec<usize>,
}

fn featurize_training_doc(
    model: &TaggerModel,
    doc: &PreparedDoc,
) -> Result<Vec<TrainSentence>, TaggerError> {
    let feats = featurize_document(
        &doc.tdoc,
        doc.gaz.as_deref(),
        doc.sections.as_deref(),
        &model.vocab,
        &model.types,
    )?;
    let gold_tags = encode_document(&doc.tdoc, &doc.gold, &model.types)?;
    Ok(feats
        .into_iter()
        .zip(gold_tags)
        .filter(|(f, _)| !f.is_empty())
        .map(|(feat, tags)| TrainSentence {
            feat,
            gold_labels: tags.iter().map(|t| t.label_index()).collect(),
        })
        .collect())
}

/// Exact-match micro-F of the model on a document set.
pub fn dev_exact_f(model: &TaggerModel, docs: &[PreparedDoc]) -> Result<f64, TaggerError> {
    let mut gold = BTreeMap::new();
    let mut pred = BTreeMap::new();
    for doc in docs {
        let p = model.predict(&doc.tdoc, doc.gaz.as_deref(), doc.sections.as_deref())?;
        gold.insert(doc.id().to_string(), doc.gold.clone());
        pred.insert(doc.id().to_string(), p);
    }
    let report = evaluate(&gold, &pred, &model.types)
        .map_err(|e| TaggerError::FeatureConfigMismatch(e.to_string()))?;
    Ok(report.micro.exact.f1)
}

/// Train in place. With `config.fixed_epochs` set the model runs exactly
/// that many epochs and `dev_docs` is ignored; otherwise training stops once
/// dev exact-F has failed to improve for `patience` consecutive epochs and
/// the best epoch's parameters are restored.
pub fn train(
    model: &mut TaggerModel,
    train_docs: &[PreparedDoc],
    dev_docs: &[PreparedDoc],
) -> Result<TrainReport, TaggerError> {
    let started = Instant::now();
    if train_docs.is_empty() {
        return Err(TaggerError::NoTrainingData);
    }
    let fixed = model.config.fixed_epochs;
    if fixed.is_none() && dev_docs.is_empty() {
        return Err(TaggerError::NoDevSet);
    }

    let mut sentences = Vec::new();
    for doc in train_docs {
        sentences.extend(featurize_training_doc(model, doc)?);
    }
    if sentences.is_empty() {
        return Err(TaggerError::NoTrainingData);
    }

    let seed = model.config.seed;
    let mut shuffle_rng = derive_rng(seed, 1);
    let mut dropout_rng = derive_rng(seed, 2);

    let adam_cfg = AdamConfig::with_lr(model.config.lr);
    let mut adam_state = AdamState::for_params(&model.params());
    let lambda = model.config.l2_lambda;
    let max_epochs = fixed.unwrap_or(model.config.max_epochs);
    let patience = model.config.patience;

    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut report = TrainReport {
        epoch_train_loss: Vec::new(),
        epoch_dev_f: Vec::new(),
        best_epoch: 0,
        stopped_epoch: 0,
        wall_ms: 0,
    };
    let mut best_f = f64::NEG_INFINITY;
    let mut best_snapshot = None;
    let mut since_improve = 0usize;

    for epoch in 1..=max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for &si in &order {
            let sent = &sentences[si];
            let loss = model.sentence_nll_backward(
                &sent.feat,
                &sent.gold_labels,
                Some(&mut dropout_rng),
            )?;
            debug_assert!(loss.is_finite());
            if lambda > 0.0 {
                l2_grad_accumulate(&mut model.params_mut(), lambda);
                model.transitions.clamp_masked_grads();
            }
            adam_step(&mut model.params_mut(), &mut adam_state, &adam_cfg);
            loss_sum += loss;
        }
        let mean_nll = loss_sum / sentences.len() as f64;
        let penalty = l2_penalty(&model.params(), lambda);
        report.epoch_train_loss.push(mean_nll + penalty);
        report.stopped_epoch = epoch;

        if !model.all_finite() {
            return Err(TaggerError::Nn(crate::nn::NnError::NonFinite(format!(
                "parameters after epoch {epoch}"
            ))));
        }

        if fixed.is_none() {
            let f = dev_exact_f(model, dev_docs)?;
            report.epoch_dev_f.push(f);
            if f > best_f {
                best_f = f;
                report.best_epoch = epoch;
                best_snapshot = Some(model.snapshot());
                since_improve = 0;
            } else {
                since_improve += 1;
                if since_improve >= patience.max(1) {
                    break;
                }
            }
        } else {
            report.best_epoch = epoch;
        }
    }

    if let Some(snapshot) = best_snapshot {
        model.restore(&snapshot);
    }
    report.wall_ms = started.elapsed().as_millis();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanEpochReport {
    pub fold_best_epochs: Vec<usize>,
    pub final_epochs: usize,
}

/// The cross-validated epoch-selection protocol: train once per fold with
/// early stopping (the held-out fold is the dev set), then train a fresh
/// model on all documents for round(mean(best epochs)) epochs without early
/// stopping.
pub fn train_with_mean_epoch<F>(
    docs: &[PreparedDoc],
    split: &FoldSplit,
    mut model_factory: F,
) -> Result<(TaggerModel, MeanEpochReport), TaggerError>
where
    F: FnMut() -> Result<TaggerModel, TaggerError>,
{
    if split.k < 2 {
        return Err(TaggerError::TooFewFolds(split.k));
    }
    let by_id: BTreeMap<&str, &PreparedDoc> = docs.iter().map(|d| (d.id(), d)).collect();
    let mut fold_best_epochs = Vec::with_capacity(split.k);
    for fold in 0..split.k {
        let train_docs: Vec<PreparedDoc> = split
            .doc_ids_outside_fold(fold)
            .iter()
            .filter_map(|id| by_id.get(id).map(|d| (*d).clone()))
            .collect();
        let dev_docs: Vec<PreparedDoc> = split
            .doc_ids_in_fold(fold)
            .iter()
            .filter_map(|id| by_id.get(id).map(|d| (*d).clone()))
            .collect();
        let mut model = model_factory()?;
        model.config.fixed_epochs = None;
        let report = train(&mut model, &train_docs, &dev_docs)?;
        fold_best_epochs.push(report.best_epoch);
    }
    let final_epochs = mean_epoch(&fold_best_epochs);

    let mut model = model_factory()?;
    model.config.fixed_epochs = Some(final_epochs);
    train(&mut model, docs, &[])?;
    Ok((
        model,
        MeanEpochReport {
            fold_best_epochs,
            final_epochs,
        },
    ))
}

/// Round(mean) rule used by [`train_with_mean_epoch`], exposed for tests.
pub fn mean_epoch(fold_best_epochs: &[usize]) -> usize {
    let mean = fold_best_epochs.iter().sum::<usize>() as f64 / fold_best_epochs.len() as f64;
    (mean.round() as usize).max(1)
}

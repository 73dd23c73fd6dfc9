//! Stratified folds, entity-count subsampling and cross-validation with
//! pooled counts, using the terminology system as a fast predictor.
//!
//! ```bash
//! cargo run --release --example cross_validation
//! ```

use clinical_ner::eval::{
    cross_validate, render_table, stratified_folds, subsample_to_entity_count, CrossValDoc, DocMeta,
};
use clinical_ner::gazetteer::{build_matcher, ConflictPolicy, TermDictionary};
use clinical_ner::synth::{generate_corpus, SynthSpec};
use clinical_ner::text::{tokenize_document, AbbrevList, NormPolicy};
use std::collections::BTreeMap;

fn main() {
    let corpus = generate_corpus(&SynthSpec {
        n_docs: 24,
        noise_rate: 0.25,
        seed: 9,
        ..Default::default()
    });

    let metas: Vec<DocMeta> = corpus
        .docs
        .iter()
        .map(|(d, _)| DocMeta {
            id: d.id.clone(),
            doc_type: d.doc_type.clone(),
            n_tokens: d.text.split_whitespace().count(),
        })
        .collect();
    let split = stratified_folds(&metas, 6, 0).unwrap();
    println!("fold sizes:");
    for fold in 0..split.k {
        println!("  fold {fold}: {} docs", split.doc_ids_in_fold(fold).len());
    }

    // Subsample documents until a target entity count is reached.
    let counts: Vec<(String, usize)> = corpus
        .docs
        .iter()
        .map(|(d, m)| (d.id.clone(), m.len()))
        .collect();
    let total: usize = counts.iter().map(|(_, c)| c).sum();
    let subset = subsample_to_entity_count(&counts, total / 2, 1).unwrap();
    println!(
        "\nsubsampled {} of {} docs to reach {} entities",
        subset.len(),
        counts.len(),
        total / 2
    );

    // Cross-validate the terminology system (training is a no-op, so the
    // per-fold closure just annotates the held-out docs).
    let policy = NormPolicy::matching();
    let dict = TermDictionary::from_tsv(&corpus.dictionary_tsv, &corpus.entity_types, &policy)
        .unwrap()
        .with_stopwords_text(&corpus.stopwords_txt, &policy);
    let matcher = build_matcher(&dict, &corpus.entity_types);
    let tdocs: BTreeMap<String, _> = corpus
        .docs
        .iter()
        .map(|(d, _)| {
            (
                d.id.clone(),
                tokenize_document(d.clone(), &AbbrevList::default(), &policy),
            )
        })
        .collect();
    let cv_docs: Vec<CrossValDoc> = corpus
        .docs
        .iter()
        .map(|(d, gold)| CrossValDoc {
            id: d.id.clone(),
            gold: gold.clone(),
        })
        .collect();
    let (_, aggregated) = cross_validate(
        &cv_docs,
        &split,
        &[0, 1, 2],
        &corpus.entity_types,
        |_seed, _fold, _train, test| {
            Ok(test
                .iter()
                .map(|id| {
                    let mentions = matcher.annotate(&tdocs[*id], ConflictPolicy::Deterministic);
                    ((*id).to_string(), mentions)
                })
                .collect())
        },
    )
    .unwrap();
    print!(
        "\n{}",
        render_table(
            "6-fold cross-validation, pooled counts",
            &[("terminology".to_string(), aggregated)]
        )
    );
}

//! Train a small biGRU-CRF on a synthetic corpus and evaluate it.
//!
//! ```bash
//! cargo run --release --example train_small_tagger
//! ```

use clinical_ner::eval::{aggregate_seeds, evaluate, render_table};
use clinical_ner::synth::{generate_corpus, SynthSpec};
use clinical_ner::tagger::{prepare_doc, train, TaggerConfig, TaggerModel, Vocab};
use clinical_ner::text::{tokenize_document, AbbrevList, NormPolicy, TokenizedDocument};
use std::collections::BTreeMap;

fn main() {
    let corpus = generate_corpus(&SynthSpec {
        n_docs: 40,
        terms_per_type: 10,
        entity_types: vec!["DrugName".into(), "DiseaseDisorder".into()],
        plant_rate: vec![0.35, 0.35],
        seed: 3,
        ..Default::default()
    });
    let docs: Vec<_> = corpus
        .docs
        .iter()
        .map(|(d, gold)| {
            prepare_doc(
                tokenize_document(d.clone(), &AbbrevList::default(), &NormPolicy::matching()),
                gold.clone(),
                None,
                None,
            )
        })
        .collect();
    let (train_docs, held_out) = docs.split_at(30);
    let (train_docs, dev_docs) = train_docs.split_at(26);

    let tdocs: Vec<&TokenizedDocument> = train_docs.iter().map(|d| &d.tdoc).collect();
    let vocab = Vocab::build(&tdocs);
    let config = TaggerConfig {
        lr: 0.01,
        max_epochs: 25,
        patience: 4,
        seed: 1,
        ..TaggerConfig::small()
    };
    let mut model = TaggerModel::new(
        config,
        corpus.entity_types.clone(),
        corpus.section_classes.clone(),
        vocab,
    )
    .unwrap();
    println!("model has {} parameters", model.num_parameters());

    let report = train(&mut model, train_docs, dev_docs).unwrap();
    println!(
        "stopped after {} epochs (best {}), dev exact-F per epoch: {:?}",
        report.stopped_epoch,
        report.best_epoch,
        report
            .epoch_dev_f
            .iter()
            .map(|f| format!("{f:.3}"))
            .collect::<Vec<_>>()
    );

    let mut gold = BTreeMap::new();
    let mut pred = BTreeMap::new();
    for d in held_out {
        gold.insert(d.id().to_string(), d.gold.clone());
        pred.insert(
            d.id().to_string(),
            model.predict(&d.tdoc, None, None).unwrap(),
        );
    }
    let eval = evaluate(&gold, &pred, &corpus.entity_types).unwrap();
    let agg = aggregate_seeds(std::slice::from_ref(&eval)).unwrap();
    print!(
        "\n{}",
        render_table("held-out evaluation", &[("biGRU-CRF".to_string(), agg)])
    );
}

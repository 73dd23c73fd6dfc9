//! The hybrid tagger's categorical features: gazetteer IOB predictions and
//! last-section-heading classes, encoded as dimension-5 embeddings.
//!
//! ```bash
//! cargo run --release --example hybrid_features
//! ```

use clinical_ner::annotation::EntityTypeSet;
use clinical_ner::annotation::Tag;
use clinical_ner::gazetteer::{build_matcher, ConflictPolicy, TermDictionary};
use clinical_ner::sections::{
    assign_section_feature, detect_headings, HeadingLexicon, SectionClasses,
};
use clinical_ner::tagger::{featurize_document, TaggerConfig, TaggerModel, Vocab};
use clinical_ner::text::{tokenize_document, AbbrevList, NormPolicy, RawDocument};

fn main() {
    let types = EntityTypeSet::new(["DrugName"]).unwrap();
    let classes = SectionClasses::default_clinical();

    let doc = RawDocument::new(
        "demo",
        "note",
        "History:\n\nAdmitted for chest pain.\n\nMedications:\n\nPlaced on heparin sodium daily.",
    );
    let tdoc = tokenize_document(doc, &AbbrevList::default(), &NormPolicy::matching());

    // Terminology predictions become per-token IOB feature ids.
    let dict = TermDictionary::from_tsv(
        "heparin sodium\tDrugName\n",
        &types,
        &NormPolicy::matching(),
    )
    .unwrap();
    let matcher = build_matcher(&dict, &types);
    let gaz = matcher.annotate(&tdoc, ConflictPolicy::Deterministic);
    println!("gazetteer predictions: {gaz:?}\n");

    // Section classes propagate from the last heading.
    let mut lex = HeadingLexicon::new(classes.clone());
    lex.insert("History", "HISTORY").unwrap();
    lex.insert("Medications", "MEDICATIONS").unwrap();
    let headings = detect_headings(&tdoc, &lex);
    let sections = assign_section_feature(&tdoc, &headings);

    let vocab = Vocab::build(&[&tdoc]);
    let feats = featurize_document(&tdoc, Some(&gaz), Some(&sections), &vocab, &types).unwrap();
    println!(
        "{:<12} {:>8} {:>12} {:>12}",
        "token", "word id", "gaz feature", "section"
    );
    for (si, sent) in tdoc.sentences.iter().enumerate() {
        for (ti, tok) in sent.iter().enumerate() {
            let gaz_id = feats[si].gaz_ids.as_ref().unwrap()[ti];
            let sec_id = feats[si].sec_ids.as_ref().unwrap()[ti];
            println!(
                "{:<12} {:>8} {:>12} {:>12}",
                tok.surface,
                feats[si].word_ids[ti],
                Tag::from_label_index(gaz_id).display(&types),
                classes.name(sec_id),
            );
        }
    }

    // With both features enabled the model gains exactly two 5-dim tables.
    let pure = TaggerModel::new(
        TaggerConfig::small(),
        types.clone(),
        classes.clone(),
        Vocab::build(&[&tdoc]),
    )
    .unwrap();
    let hybrid = TaggerModel::new(
        TaggerConfig::small().hybrid(),
        types.clone(),
        classes.clone(),
        Vocab::build(&[&tdoc]),
    )
    .unwrap();
    println!(
        "\npure model: {} parameters, hybrid: {} (+{} for the two feature tables and wider GRU input)",
        pure.num_parameters(),
        hybrid.num_parameters(),
        hybrid.num_parameters() - pure.num_parameters()
    );
}

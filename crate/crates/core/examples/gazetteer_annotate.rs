//! The terminology-based system: load a typed term list, compile the
//! matching automaton and annotate text.
//!
//! ```bash
//! cargo run --release --example gazetteer_annotate
//! ```

use clinical_ner::annotation::EntityTypeSet;
use clinical_ner::gazetteer::{build_matcher, ConflictPolicy, TermDictionary};
use clinical_ner::text::{tokenize_document, AbbrevList, NormPolicy, RawDocument};

fn main() {
    let types = EntityTypeSet::new(["DrugName", "DiseaseDisorder"]).unwrap();
    let tsv = "\
heparin sodium\tDrugName\tumls
héparine\tDrugName\tsnomed
myocardial infarction\tDiseaseDisorder\tumls
infarction\tDiseaseDisorder\tumls
cancer de poumon\tDiseaseDisorder\tsnomed
";
    let dict = TermDictionary::from_tsv(tsv, &types, &NormPolicy::matching())
        .unwrap()
        .with_stopwords(["de".to_string(), "la".to_string()]);
    println!(
        "dictionary: {} entries, stopwords {:?}",
        dict.len(),
        dict.stopwords()
    );

    let matcher = build_matcher(&dict, &types);
    let doc = RawDocument::new(
        "demo",
        "note",
        "Patient placed on HEPARIN sodium after myocardial infarction. \
         Suivi pour cancer de la poumon, héparine poursuivie.",
    );
    let tdoc = tokenize_document(doc, &AbbrevList::default(), &NormPolicy::matching());

    println!("\n=== Matches (deterministic conflict resolution) ===");
    for m in matcher.annotate(&tdoc, ConflictPolicy::Deterministic) {
        println!("  {m}");
    }
    // Case folding matched HEPARIN, accent folding matched héparine, the
    // stopword skip matched "cancer de la poumon" against entry tokens
    // [cancer, poumon], and the nested "infarction" lost to the longer span.

    println!("\n=== Same text, seeded random conflict policy ===");
    for m in matcher.annotate(&tdoc, ConflictPolicy::SeededRandom(7)) {
        println!("  {m}");
    }
}

//! Exact- and partial-match scoring, and inter-annotator agreement.
//!
//! ```bash
//! cargo run --release --example evaluate_predictions
//! ```

use clinical_ner::annotation::{EntityMention, EntityTypeSet};
use clinical_ner::eval::{agreement, evaluate};
use std::collections::BTreeMap;

fn main() {
    let types = EntityTypeSet::new(["DiseaseDisorder"]).unwrap();
    let gold = BTreeMap::from([(
        "doc-1".to_string(),
        vec![
            EntityMention::new("DiseaseDisorder", 0, 10, "first gold"),
            EntityMention::new("DiseaseDisorder", 20, 30, "other gold"),
        ],
    )]);
    // One exact hit, one boundary mismatch.
    let pred = BTreeMap::from([(
        "doc-1".to_string(),
        vec![
            EntityMention::new("DiseaseDisorder", 0, 10, "first gold"),
            EntityMention::new("DiseaseDisorder", 23, 33, "her gold..."),
        ],
    )]);

    let report = evaluate(&gold, &pred, &types).unwrap();
    println!(
        "exact:   P={:.2} R={:.2} F={:.2}   (TP {}, FP {}, FN {})",
        report.micro.exact.precision,
        report.micro.exact.recall,
        report.micro.exact.f1,
        report.micro.exact.counts.tp,
        report.micro.exact.counts.fp,
        report.micro.exact.counts.missed,
    );
    println!(
        "partial: P={:.2} R={:.2} F={:.2}   (boundary mismatches tolerated)",
        report.micro.partial.precision, report.micro.partial.recall, report.micro.partial.f1,
    );

    // Agreement treats one annotator as gold; F is symmetric.
    let ab = agreement(&gold, &pred, &types).unwrap();
    let ba = agreement(&pred, &gold, &types).unwrap();
    println!(
        "\nagreement F(a,b) = {:.4}, F(b,a) = {:.4}  (precision and recall swap)",
        ab.micro.exact.f1, ba.micro.exact.f1
    );
    assert!((ab.micro.exact.f1 - ba.micro.exact.f1).abs() < 1e-12);
}

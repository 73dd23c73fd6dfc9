//! Linear-chain CRF: sequence scoring, log-partition, Viterbi decoding and
//! the brute-force oracle.
//!
//! ```bash
//! cargo run --release --example crf_inference
//! ```

use clinical_ner::annotation::Tag;
use clinical_ner::crf::{brute_force, log_partition, score_sequence, viterbi_decode, Transitions};

fn main() {
    // Three tokens, three labels (O, B-Drug, I-Drug), hand-set scores.
    let emissions = vec![
        vec![2.0, 0.1, -1.0],
        vec![0.0, 3.0, 0.5],
        vec![-0.5, 0.2, 2.5],
    ];
    let mut tr = Transitions::zeros(3);
    tr.trans.value.data_mut()[3 + 2] = 1.5; // B -> I encouraged

    let logz = log_partition(&emissions, &tr).unwrap();
    let (tags, score) = viterbi_decode(&emissions, &tr).unwrap();
    println!("log Z            = {logz:.6}");
    println!("viterbi tags     = {tags:?} (score {score:.6})");
    println!(
        "gold-path score  = {:.6}",
        score_sequence(&emissions, &tr, &tags).unwrap()
    );

    let oracle = brute_force(&emissions, &tr).unwrap();
    println!(
        "brute-force logZ = {:.6}  (diff {:.2e})",
        oracle.log_z,
        (oracle.log_z - logz).abs()
    );
    println!(
        "brute-force best = {:?} (score {:.6})",
        oracle.best_tags, oracle.best_score
    );
    assert_eq!(tags, oracle.best_tags);

    // With the IOB structural mask, an I- label can never follow O.
    let masked = Transitions::iob_masked(1);
    let adversarial = vec![
        vec![0.0, -5.0, 9.0], // emission strongly prefers I-Drug at t=0
        vec![0.0, -5.0, 9.0],
    ];
    let (tags, _) = viterbi_decode(&adversarial, &masked).unwrap();
    let shown: Vec<Tag> = tags.iter().map(|&i| Tag::from_label_index(i)).collect();
    println!("\nmasked decode of adversarial emissions: {shown:?}");
    assert!(!matches!(shown[0], Tag::Inside(_)));
}

//! Verify every layer's analytic gradient against central finite
//! differences, plus the CRF against brute-force enumeration.
//!
//! ```bash
//! cargo run --release --example gradient_check
//! ```

use clinical_ner::verify::{crf_oracle_check, gradient_suite};

fn main() {
    let oracle = crf_oracle_check(200, 42);
    println!(
        "crf oracle: {} instances, max |logZ - brute| = {:.2e}, tag mismatches = {}",
        oracle.n_instances, oracle.max_logz_err, oracle.viterbi_tag_mismatches
    );

    println!(
        "\n{:<18} {:>12} {:>11} {:>6}",
        "layer", "max rel err", "tolerance", ""
    );
    for e in gradient_suite(0) {
        println!(
            "{:<18} {:>12.3e} {:>11.0e} {:>6}",
            e.name,
            e.max_rel_err,
            e.tolerance,
            if e.passed() { "ok" } else { "FAIL" }
        );
    }
}

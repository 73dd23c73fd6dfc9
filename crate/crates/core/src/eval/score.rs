//! Mention-level scoring against gold annotations.

use super::{EvalError, EvalReport, MatchCounts, ModeReport, TypeReport};
use crate::annotation::{EntityMention, EntityTypeSet};
use std::collections::BTreeMap;

/// Annotations per document, keyed by document id.
pub type DocSet = BTreeMap<String, Vec<EntityMention>>;

fn check_doc_sets(gold: &DocSet, pred: &DocSet) -> Result<(), EvalError> {
    if gold.len() != pred.len() || !gold.keys().all(|k| pred.contains_key(k)) {
        let only_gold: Vec<&String> = gold.keys().filter(|k| !pred.contains_key(*k)).collect();
        let only_pred: Vec<&String> = pred.keys().filter(|k| !gold.contains_key(*k)).collect();
        return Err(EvalError::DocSetMismatch(format!(
            "only in gold: {only_gold:?}, only in pred: {only_pred:?}"
        )));
    }
    Ok(())
}

fn of_type<'a>(mentions: &'a [EntityMention], etype: &str) -> Vec<&'a EntityMention> {
    let mut v: Vec<&EntityMention> = mentions.iter().filter(|m| m.etype == etype).collect();
    v.sort_by_key(|m| (m.start, m.end));
    v
}

fn exact_counts(gold: &[&EntityMention], pred: &[&EntityMention]) -> MatchCounts {
    let gold_set: std::collections::HashSet<(usize, usize)> =
        gold.iter().map(|m| (m.start, m.end)).collect();
    let tp = pred
        .iter()
        .filter(|m| gold_set.contains(&(m.start, m.end)))
        .count();
    MatchCounts {
        tp,
        fp: pred.len() - tp,
        missed: gold.len() - tp,
    }
}

/// Greedy one-to-one overlap matching in document order: each prediction
/// consumes the first unconsumed same-type gold mention it overlaps.
fn partial_counts(gold: &[&EntityMention], pred: &[&EntityMention]) -> MatchCounts {
    let mut consumed = vec![false; gold.len()];
    let mut tp = 0;
    for p in pred {
        if let Some(gi) = gold
            .iter()
            .enumerate()
            .position(|(gi, g)| !consumed[gi] && g.overlaps(p))
        {
            consumed[gi] = true;
            tp += 1;
        }
    }
    MatchCounts {
        tp,
        fp: pred.len() - tp,
        missed: gold.len() - tp,
    }
}

fn score_mode(
    gold: &DocSet,
    pred: &DocSet,
    types: &EntityTypeSet,
    count_fn: fn(&[&EntityMention], &[&EntityMention]) -> MatchCounts,
) -> Vec<MatchCounts> {
    let mut per_type = vec![MatchCounts::default(); types.len()];
    for (doc_id, gold_ms) in gold {
        let pred_ms = &pred[doc_id];
        for (ti, tname) in types.names().iter().enumerate() {
            let g = of_type(gold_ms, tname);
            let p = of_type(pred_ms, tname);
            per_type[ti].add(&count_fn(&g, &p));
        }
    }
    per_type
}

fn build_report(
    exact: Vec<MatchCounts>,
    partial: Vec<MatchCounts>,
    types: &EntityTypeSet,
) -> EvalReport {
    let mut micro_exact = MatchCounts::default();
    let mut micro_partial = MatchCounts::default();
    let mut per_type = Vec::with_capacity(types.len());
    for (ti, tname) in types.names().iter().enumerate() {
        micro_exact.add(&exact[ti]);
        micro_partial.add(&partial[ti]);
        per_type.push((
            tname.clone(),
            TypeReport {
                exact: ModeReport::from(exact[ti]),
                partial: ModeReport::from(partial[ti]),
            },
        ));
    }
    let report = EvalReport {
        types: per_type,
        micro: TypeReport {
            exact: ModeReport::from(micro_exact),
            partial: ModeReport::from(micro_partial),
        },
    };
    // Micro counts are the sums of per-type counts by construction; exact
    // TPs can never exceed partial TPs.
    debug_assert!(report.micro.exact.counts.tp <= report.micro.partial.counts.tp);
    report
}

/// Exact-match scoring only.
pub fn exact_score(
    gold: &DocSet,
    pred: &DocSet,
    types: &EntityTypeSet,
) -> Result<EvalReport, EvalError> {
    check_doc_sets(gold, pred)?;
    let exact = score_mode(gold, pred, types, exact_counts);
    Ok(build_report(exact.clone(), exact, types))
}

/// Partial-match scoring only.
pub fn partial_score(
    gold: &DocSet,
    pred: &DocSet,
    types: &EntityTypeSet,
) -> Result<EvalReport, EvalError> {
    check_doc_sets(gold, pred)?;
    let partial = score_mode(gold, pred, types, partial_counts);
    Ok(build_report(partial.clone(), partial, types))
}

/// Full report with both exact and partial metrics.
pub fn evaluate(
    gold: &DocSet,
    pred: &DocSet,
    types: &EntityTypeSet,
) -> Result<EvalReport, EvalError> {
    check_doc_sets(gold, pred)?;
    let exact = score_mode(gold, pred, types, exact_counts);
    let partial = score_mode(gold, pred, types, partial_counts);
    Ok(build_report(exact, partial, types))
}

/// Inter-annotator agreement: annotator A is treated as gold, B as
/// prediction. F is symmetric under swapping the annotators (P and R swap).
pub fn agreement(
    ann_a: &DocSet,
    ann_b: &DocSet,
    types: &EntityTypeSet,
) -> Result<EvalReport, EvalError> {
    evaluate(ann_a, ann_b, types)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn types() -> EntityTypeSet {
        EntityTypeSet::new(["Disease", "Drug"]).unwrap()
    }

    fn docset(mentions: Vec<EntityMention>) -> DocSet {
        BTreeMap::from([("d1".to_string(), mentions)])
    }

    fn m(etype: &str, start: usize, end: usize) -> EntityMention {
        EntityMention::new(etype, start, end, "x".repeat(end - start))
    }

    #[test]
    fn identical_sets_score_one() {
        let gold = docset(vec![m("Disease", 0, 10), m("Drug", 20, 25)]);
        let r = evaluate(&gold, &gold.clone(), &types()).unwrap();
        assert_eq!(r.micro.exact.f1, 1.0);
        assert_eq!(r.micro.partial.f1, 1.0);
    }

    #[test]
    fn spurious_prediction_gives_half_precision() {
        // 1 gold, prediction = gold + 1 extra: P=0.5, R=1, F=2/3.
        let gold = docset(vec![m("Disease", 0, 10)]);
        let pred = docset(vec![m("Disease", 0, 10), m("Disease", 20, 30)]);
        let r = evaluate(&gold, &pred, &types()).unwrap();
        assert_eq!(r.micro.exact.precision, 0.5);
        assert_eq!(r.micro.exact.recall, 1.0);
        assert!((r.micro.exact.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_mismatch_fails_exact_but_passes_partial() {
        let gold = docset(vec![m("Disease", 0, 10)]);
        let pred = docset(vec![m("Disease", 3, 12)]);
        let r = evaluate(&gold, &pred, &types()).unwrap();
        assert_eq!(r.micro.exact.counts.tp, 0);
        assert_eq!(r.micro.partial.counts.tp, 1);
        assert_eq!(r.micro.partial.f1, 1.0);
    }

    #[test]
    fn partial_requires_same_type() {
        let gold = docset(vec![m("Disease", 0, 10)]);
        let pred = docset(vec![m("Drug", 3, 12)]);
        let r = evaluate(&gold, &pred, &types()).unwrap();
        assert_eq!(r.micro.partial.counts.tp, 0);
    }

    #[test]
    fn two_predictions_on_one_gold_yield_one_tp_one_fp() {
        // Greedy one-to-one matching traced by hand.
        let gold = docset(vec![m("Disease", 0, 10)]);
        let pred = docset(vec![m("Disease", 0, 4), m("Disease", 5, 10)]);
        let r = evaluate(&gold, &pred, &types()).unwrap();
        assert_eq!(r.micro.partial.counts.tp, 1);
        assert_eq!(r.micro.partial.counts.fp, 1);
        assert_eq!(r.micro.partial.counts.missed, 0);
    }

    #[test]
    fn doc_set_mismatch_is_error() {
        let gold = docset(vec![]);
        let pred = BTreeMap::from([("other".to_string(), vec![])]);
        assert!(matches!(
            evaluate(&gold, &pred, &types()),
            Err(EvalError::DocSetMismatch(_))
        ));
    }

    #[test]
    fn empty_sets_score_zero_without_division_error() {
        let gold = docset(vec![]);
        let r = evaluate(&gold, &gold.clone(), &types()).unwrap();
        assert_eq!(r.micro.exact.precision, 0.0);
        assert_eq!(r.micro.exact.recall, 0.0);
        assert_eq!(r.micro.exact.f1, 0.0);
    }

    #[test]
    fn micro_counts_are_type_sums() {
        let gold = docset(vec![m("Disease", 0, 5), m("Drug", 10, 15)]);
        let pred = docset(vec![m("Disease", 0, 5), m("Drug", 30, 35)]);
        let r = evaluate(&gold, &pred, &types()).unwrap();
        let sum_tp: usize = r.types.iter().map(|(_, t)| t.exact.counts.tp).sum();
        assert_eq!(r.micro.exact.counts.tp, sum_tp);
    }

    #[test]
    fn identical_annotations_agree_perfectly() {
        let a = docset(vec![m("Disease", 0, 5)]);
        let r = agreement(&a, &a.clone(), &types()).unwrap();
        assert_eq!(r.micro.exact.f1, 1.0);
    }

    #[test]
    fn disjoint_annotations_agree_not_at_all() {
        let a = docset(vec![m("Disease", 0, 5)]);
        let b = docset(vec![m("Disease", 10, 15)]);
        let r = agreement(&a, &b, &types()).unwrap();
        assert_eq!(r.micro.exact.f1, 0.0);
        assert_eq!(r.micro.partial.f1, 0.0);
    }

    /// Random non-overlapping mention sets over a small coordinate range.
    fn mention_set() -> impl Strategy<Value = Vec<EntityMention>> {
        proptest::collection::vec((0usize..40, 1usize..6, 0usize..2), 0..8).prop_map(|raw| {
            let mut out: Vec<EntityMention> = Vec::new();
            for (start, len, t) in raw {
                let cand = m(if t == 0 { "Disease" } else { "Drug" }, start, start + len);
                if out.iter().all(|o| !o.overlaps(&cand)) {
                    out.push(cand);
                }
            }
            out
        })
    }

    proptest! {
        #[test]
        fn agreement_f_is_annotator_symmetric(a in mention_set(), b in mention_set()) {
            let da = docset(a);
            let db = docset(b);
            let ab = agreement(&da, &db, &types()).unwrap();
            let ba = agreement(&db, &da, &types()).unwrap();
            prop_assert!((ab.micro.exact.f1 - ba.micro.exact.f1).abs() < 1e-12);
            prop_assert!((ab.micro.partial.f1 - ba.micro.partial.f1).abs() < 1e-12);
            // P and R swap.
            prop_assert!((ab.micro.exact.precision - ba.micro.exact.recall).abs() < 1e-12);
        }

        #[test]
        fn exact_f_never_exceeds_partial_f(gold in mention_set(), pred in mention_set()) {
            let r = evaluate(&docset(gold), &docset(pred), &types()).unwrap();
            prop_assert!(r.micro.exact.counts.tp <= r.micro.partial.counts.tp);
            prop_assert!(r.micro.exact.f1 <= r.micro.partial.f1 + 1e-12);
            for (_, t) in &r.types {
                prop_assert!(t.exact.f1 <= t.partial.f1 + 1e-12);
                for v in [t.exact.precision, t.exact.recall, t.exact.f1,
                          t.partial.precision, t.partial.recall, t.partial.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }

        #[test]
        fn scorer_ignores_mention_order(gold in mention_set(), pred in mention_set()) {
            let r1 = evaluate(&docset(gold.clone()), &docset(pred.clone()), &types()).unwrap();
            let mut gold_rev = gold;
            gold_rev.reverse();
            let mut pred_rev = pred;
            pred_rev.reverse();
            let r2 = evaluate(&docset(gold_rev), &docset(pred_rev), &types()).unwrap();
            prop_assert_eq!(r1, r2);
        }
    }
}

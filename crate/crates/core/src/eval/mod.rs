//! Exact- and partial-match scoring, inter-annotator agreement, stratified
//! fold splitting, entity-count subsampling, multi-seed aggregation and
//! cross-validation.
//!
//! Exact match requires identical (type, start, end); partial match accepts
//! any same-type character overlap, matched greedily one-to-one in document
//! order. Micro-averages pool TP/FP/FN counts across types (and, in
//! cross-validation, across folds).

mod crossval;
mod folds;
mod report;
mod score;

pub use crossval::{cross_validate, CrossValDoc};
pub use folds::{stratified_folds, subsample_to_entity_count, DocMeta, FoldSplit};
pub use report::{aggregate_seeds, render_table, MultiSeedReport, PrfSummary, Stat, TypeSummary};
pub use score::{agreement, evaluate, exact_score, partial_score};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("gold and predicted document sets differ: {0}")]
    DocSetMismatch(String),
    #[error("need at least {need} documents for {k} folds, got {got}")]
    TooFewDocuments { need: usize, k: usize, got: usize },
    #[error("target entity count {target} exceeds total {total}")]
    TargetTooLarge { target: usize, total: usize },
    #[error("report shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("system error: {0}")]
    System(String),
}

/// TP/FP/FN counts for one matching mode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub missed: usize,
}

impl MatchCounts {
    pub fn add(&mut self, other: &MatchCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.missed += other.missed;
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.missed)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Counts plus derived precision/recall/F for one matching mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub counts: MatchCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl From<MatchCounts> for ModeReport {
    fn from(counts: MatchCounts) -> Self {
        ModeReport {
            counts,
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
        }
    }
}

/// Exact and partial results for one entity type (or the micro-average).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeReport {
    pub exact: ModeReport,
    pub partial: ModeReport,
}

/// Full scoring report: per-type plus micro-averaged exact/partial metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Per-type reports in entity-type-set order.
    pub types: Vec<(String, TypeReport)>,
    pub micro: TypeReport,
}

impl EvalReport {
    pub fn type_report(&self, name: &str) -> Option<&TypeReport> {
        self.types.iter().find(|(n, _)| n == name).map(|(_, r)| r)
    }
}

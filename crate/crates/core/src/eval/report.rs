//! Multi-seed aggregation and the comparison-table rendering.

use super::{EvalError, EvalReport};
use serde::{Deserialize, Serialize};

/// Mean, minimum and maximum of one metric over n runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    fn from_values(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        Stat {
            mean: values.iter().sum::<f64>() / n,
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Aggregated precision/recall/F for one matching mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfSummary {
    pub f1: Stat,
    pub precision: Stat,
    pub recall: Stat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeSummary {
    pub exact: PrfSummary,
    pub partial: PrfSummary,
}

/// Per-metric mean/min/max over a set of per-seed reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSeedReport {
    pub n_runs: usize,
    pub types: Vec<(String, TypeSummary)>,
    pub micro: TypeSummary,
}

fn summarize<F: Fn(&EvalReport) -> (f64, f64, f64)>(reports: &[&EvalReport], get: F) -> PrfSummary {
    let fs: Vec<f64> = reports.iter().map(|r| get(r).0).collect();
    let ps: Vec<f64> = reports.iter().map(|r| get(r).1).collect();
    let rs: Vec<f64> = reports.iter().map(|r| get(r).2).collect();
    PrfSummary {
        f1: Stat::from_values(&fs),
        precision: Stat::from_values(&ps),
        recall: Stat::from_values(&rs),
    }
}

/// Elementwise mean/min/max over reports of identical shape.
pub fn aggregate_seeds(reports: &[EvalReport]) -> Result<MultiSeedReport, EvalError> {
    let first = reports.first().ok_or_else(|| {
        EvalError::ShapeMismatch("aggregate_seeds needs at least one report".into())
    })?;
    let type_names: Vec<&String> = first.types.iter().map(|(n, _)| n).collect();
    for r in reports.iter().skip(1) {
        let names: Vec<&String> = r.types.iter().map(|(n, _)| n).collect();
        if names != type_names {
            return Err(EvalError::ShapeMismatch(format!(
                "type sets differ: {type_names:?} vs {names:?}"
            )));
        }
    }
    let refs: Vec<&EvalReport> = reports.iter().collect();
    let mut types = Vec::with_capacity(type_names.len());
    for (ti, name) in type_names.iter().enumerate() {
        types.push((
            (*name).clone(),
            TypeSummary {
                exact: summarize(&refs, |r| {
                    let m = &r.types[ti].1.exact;
                    (m.f1, m.precision, m.recall)
                }),
                partial: summarize(&refs, |r| {
                    let m = &r.types[ti].1.partial;
                    (m.f1, m.precision, m.recall)
                }),
            },
        ));
    }
    Ok(MultiSeedReport {
        n_runs: reports.len(),
        types,
        micro: TypeSummary {
            exact: summarize(&refs, |r| {
                (
                    r.micro.exact.f1,
                    r.micro.exact.precision,
                    r.micro.exact.recall,
                )
            }),
            partial: summarize(&refs, |r| {
                (
                    r.micro.partial.f1,
                    r.micro.partial.precision,
                    r.micro.partial.recall,
                )
            }),
        },
    })
}

fn pct(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

/// `mean [min-max]` as percentages; single runs print the mean only.
fn fmt_stat(s: &Stat, n_runs: usize) -> String {
    if n_runs <= 1 {
        pct(s.mean)
    } else {
        format!("{} [{}-{}]", pct(s.mean), pct(s.min), pct(s.max))
    }
}

fn fmt_row(name: &str, s: &TypeSummary, n: usize) -> String {
    format!(
        "{:<22} {:>18} {:>18} {:>18} {:>18} {:>18} {:>18}\n",
        name,
        fmt_stat(&s.exact.f1, n),
        fmt_stat(&s.exact.precision, n),
        fmt_stat(&s.exact.recall, n),
        fmt_stat(&s.partial.f1, n),
        fmt_stat(&s.partial.precision, n),
        fmt_stat(&s.partial.recall, n),
    )
}

/// Human-readable comparison table: one row per system, exact and partial
/// F/P/R with `mean [min-max]` over seeds, micro-average first and per-type
/// blocks when more than one entity type is configured.
pub fn render_table(title: &str, systems: &[(String, MultiSeedReport)]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{title}\n"));
    out.push_str(&format!(
        "{:<22} {:>18} {:>18} {:>18} {:>18} {:>18} {:>18}\n",
        "System", "exact-F", "exact-P", "exact-R", "partial-F", "partial-P", "partial-R"
    ));
    let multi_type = systems.first().is_some_and(|(_, r)| r.types.len() > 1);
    if multi_type {
        out.push_str("— micro-average —\n");
    }
    for (name, report) in systems {
        out.push_str(&fmt_row(name, &report.micro, report.n_runs));
    }
    if multi_type {
        let type_names: Vec<String> = systems[0].1.types.iter().map(|(n, _)| n.clone()).collect();
        for tname in &type_names {
            out.push_str(&format!("— {tname} —\n"));
            for (name, report) in systems {
                if let Some((_, summary)) = report.types.iter().find(|(n, _)| n == tname) {
                    out.push_str(&fmt_row(name, summary, report.n_runs));
                }
            }
        }
    }
    out
}

//! End-to-end comparison protocol: terminology vs pure biGRU-CRF vs hybrid,
//! cross-validated with multi-seed mean/min/max reporting.

use crate::annotation::EntityTypeSet;
use crate::corpus::{load_corpus, CorpusError};
use crate::eval::{
    aggregate_seeds, cross_validate, evaluate, render_table, stratified_folds, CrossValDoc,
    DocMeta, EvalError, EvalReport, FoldSplit, MultiSeedReport,
};
use crate::gazetteer::{
    build_matcher, filter_common_terms, ConflictPolicy, FrequencyList, GazetteerError,
    MatcherAutomaton, TermDictionary,
};
use crate::sections::{HeadingLexicon, SectionClasses, SectionError};
use crate::tagger::{
    prepare_doc, train, PreparedDoc, TaggerConfig, TaggerError, TaggerModel, Vocab,
};
use crate::text::{tokenize_document, AbbrevList, NormPolicy, TokenizedDocument};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config field {field}: {msg}")]
    Config { field: String, msg: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Gazetteer(#[from] GazetteerError),
    #[error(transparent)]
    Sections(#[from] SectionError),
    #[error(transparent)]
    Tagger(#[from] TaggerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub corpus_dir: PathBuf,
    /// Any of "terminology", "pure", "hybrid".
    pub systems: Vec<String>,
    pub seeds: Vec<u64>,
    pub folds: usize,
    pub fold_seed: u64,
    /// Fraction of each fold's training material held out as dev set.
    pub dev_fraction: f64,
    /// Keep only dictionary unigrams below this top-N frequency rank.
    pub freq_top_n: Option<usize>,
    pub conflict_policy: String,
    pub tagger: TaggerConfig,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            corpus_dir: PathBuf::from("corpus"),
            systems: vec!["terminology".into(), "pure".into(), "hybrid".into()],
            seeds: vec![0, 1, 2, 3, 4],
            folds: 6,
            fold_seed: 0,
            dev_fraction: 0.15,
            freq_top_n: None,
            conflict_policy: "det".into(),
            tagger: TaggerConfig::small(),
            out_dir: PathBuf::from("experiment-out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.systems.is_empty() {
            return Err(ExperimentError::Config {
                field: "systems".into(),
                msg: "must name at least one system".into(),
            });
        }
        for s in &self.systems {
            if !["terminology", "pure", "hybrid"].contains(&s.as_str()) {
                return Err(ExperimentError::Config {
                    field: "systems".into(),
                    msg: format!("unknown system `{s}` (expected terminology|pure|hybrid)"),
                });
            }
        }
        if self.seeds.is_empty() {
            return Err(ExperimentError::Config {
                field: "seeds".into(),
                msg: "must list at least one seed".into(),
            });
        }
        if self.folds < 2 {
            return Err(ExperimentError::Config {
                field: "folds".into(),
                msg: "must be at least 2".into(),
            });
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return Err(ExperimentError::Config {
                field: "dev_fraction".into(),
                msg: "must be in [0,1)".into(),
            });
        }
        if ConflictPolicy::parse(&self.conflict_policy).is_none() {
            return Err(ExperimentError::Config {
                field: "conflict_policy".into(),
                msg: format!("`{}` is not det|rand:<seed>", self.conflict_policy),
            });
        }
        Ok(())
    }
}

/// Everything loaded from a corpus directory, ready to run systems on.
pub struct CorpusBundle {
    pub types: EntityTypeSet,
    pub classes: SectionClasses,
    pub tdocs: Vec<TokenizedDocument>,
    pub gold: BTreeMap<String, Vec<crate::annotation::EntityMention>>,
    pub matcher: MatcherAutomaton,
    pub headings: HeadingLexicon,
    pub abbrevs: AbbrevList,
}

fn read_optional(path: &Path) -> Option<String> {
    fs::read_to_string(path).ok()
}

/// Load a corpus directory plus its resource files and compile the matcher.
pub fn load_bundle(dir: &Path, freq_top_n: Option<usize>) -> Result<CorpusBundle, ExperimentError> {
    let types = match read_optional(&dir.join("entity_types.txt")) {
        Some(text) => EntityTypeSet::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect::<Vec<_>>(),
        )
        .map_err(|_| ExperimentError::Config {
            field: "entity_types.txt".into(),
            msg: "invalid entity type set".into(),
        })?,
        None => EntityTypeSet::default_clinical(),
    };
    let classes = SectionClasses::default_clinical();
    let abbrevs = match read_optional(&dir.join("abbreviations.txt")) {
        Some(text) => AbbrevList::from_text(&text),
        None => AbbrevList::default(),
    };
    let policy = NormPolicy::matching();

    let mut dict = match read_optional(&dir.join("dictionary.tsv")) {
        Some(text) => TermDictionary::from_tsv(&text, &types, &policy)?,
        None => TermDictionary::default(),
    };
    if let Some(text) = read_optional(&dir.join("stopwords.txt")) {
        dict = dict.with_stopwords_text(&text, &policy);
    }
    if let Some(n) = freq_top_n {
        if let Some(text) = read_optional(&dir.join("frequencies.tsv")) {
            let freq = FrequencyList::from_tsv(&text)?;
            let threshold = freq.top_n_threshold(n);
            if threshold != u64::MAX {
                dict = filter_common_terms(dict, &freq, threshold);
            }
        }
    }
    let matcher = build_matcher(&dict, &types);

    let headings = match read_optional(&dir.join("headings.tsv")) {
        Some(text) => HeadingLexicon::from_tsv(&text, classes.clone())?,
        None => HeadingLexicon::new(classes.clone()),
    };

    let disk = load_corpus(dir, &types)?;
    let mut tdocs = Vec::new();
    let mut gold = BTreeMap::new();
    for (doc, mentions) in disk.docs {
        if let Some(ms) = mentions {
            gold.insert(doc.id.clone(), ms);
        }
        tdocs.push(tokenize_document(doc, &abbrevs, &policy));
    }
    Ok(CorpusBundle {
        types,
        classes,
        tdocs,
        gold,
        matcher,
        headings,
        abbrevs,
    })
}

impl CorpusBundle {
    /// Documents with gold annotations, with hybrid features attached when
    /// requested.
    pub fn prepared_docs(&self, hybrid: bool) -> Vec<PreparedDoc> {
        self.tdocs
            .iter()
            .filter(|t| self.gold.contains_key(&t.doc.id))
            .map(|t| {
                prepare_doc(
                    t.clone(),
                    self.gold[&t.doc.id].clone(),
                    hybrid.then_some(&self.matcher),
                    hybrid.then_some(&self.headings),
                )
            })
            .collect()
    }

    pub fn doc_metas(&self) -> Vec<DocMeta> {
        self.tdocs
            .iter()
            .filter(|t| self.gold.contains_key(&t.doc.id))
            .map(|t| DocMeta {
                id: t.doc.id.clone(),
                doc_type: t.doc.doc_type.clone(),
                n_tokens: t.num_tokens(),
            })
            .collect()
    }
}

/// Deterministically carve a dev set out of a fold's training documents.
pub fn carve_dev(
    mut train_docs: Vec<PreparedDoc>,
    dev_fraction: f64,
    seed: u64,
) -> (Vec<PreparedDoc>, Vec<PreparedDoc>) {
    train_docs.sort_by(|a, b| a.id().cmp(b.id()));
    let mut rng = crate::nn::derive_rng(seed, 3);
    train_docs.shuffle(&mut rng);
    let n_dev = ((train_docs.len() as f64 * dev_fraction) as usize).max(1);
    let dev = train_docs.split_off(train_docs.len() - n_dev);
    (train_docs, dev)
}

/// Train a tagger on `train_docs` (with a dev carve for early stopping) and
/// predict the test documents.
#[allow(clippy::too_many_arguments)]
pub fn run_tagger_fold(
    config: &TaggerConfig,
    types: &EntityTypeSet,
    classes: &SectionClasses,
    train_docs: Vec<PreparedDoc>,
    test_docs: &[PreparedDoc],
    dev_fraction: f64,
    seed: u64,
) -> Result<BTreeMap<String, Vec<crate::annotation::EntityMention>>, TaggerError> {
    let tdocs: Vec<&TokenizedDocument> = train_docs.iter().map(|d| &d.tdoc).collect();
    let vocab = Vocab::build(&tdocs);
    let mut model = TaggerModel::new(
        TaggerConfig {
            seed,
            ..config.clone()
        },
        types.clone(),
        classes.clone(),
        vocab,
    )?;
    let (train_split, dev_split) = if model.config.fixed_epochs.is_some() {
        (train_docs, Vec::new())
    } else {
        carve_dev(train_docs, dev_fraction, seed)
    };
    train(&mut model, &train_split, &dev_split)?;
    let mut out = BTreeMap::new();
    for doc in test_docs {
        let pred = model.predict(&doc.tdoc, doc.gaz.as_deref(), doc.sections.as_deref())?;
        out.insert(doc.id().to_string(), pred);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemResult {
    pub name: String,
    pub per_seed: Vec<EvalReport>,
    pub aggregate: MultiSeedReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub systems: Vec<SystemResult>,
    pub table: String,
}

fn terminology_system(
    bundle: &CorpusBundle,
    policy: ConflictPolicy,
) -> Result<SystemResult, ExperimentError> {
    let mut pred = BTreeMap::new();
    for tdoc in &bundle.tdocs {
        if bundle.gold.contains_key(&tdoc.doc.id) {
            pred.insert(tdoc.doc.id.clone(), bundle.matcher.annotate(tdoc, policy));
        }
    }
    let report = evaluate(&bundle.gold, &pred, &bundle.types)?;
    Ok(SystemResult {
        name: "terminology".into(),
        aggregate: aggregate_seeds(std::slice::from_ref(&report))?,
        per_seed: vec![report],
    })
}

fn neural_system(
    name: &str,
    bundle: &CorpusBundle,
    split: &FoldSplit,
    cfg: &ExperimentConfig,
) -> Result<SystemResult, ExperimentError> {
    let hybrid = name == "hybrid";
    let tagger_cfg = if hybrid {
        cfg.tagger.clone().hybrid()
    } else {
        TaggerConfig {
            use_gazetteer_feature: false,
            use_section_feature: false,
            ..cfg.tagger.clone()
        }
    };
    let docs = bundle.prepared_docs(hybrid);
    let by_id: BTreeMap<&str, &PreparedDoc> = docs.iter().map(|d| (d.id(), d)).collect();
    let cv_docs: Vec<CrossValDoc> = docs
        .iter()
        .map(|d| CrossValDoc {
            id: d.id().to_string(),
            gold: d.gold.clone(),
        })
        .collect();
    let (per_seed, aggregate) = cross_validate(
        &cv_docs,
        split,
        &cfg.seeds,
        &bundle.types,
        |seed, _fold, train_ids, test_ids| {
            let train_docs: Vec<PreparedDoc> = train_ids
                .iter()
                .filter_map(|id| by_id.get(id).map(|d| (*d).clone()))
                .collect();
            let test_docs: Vec<PreparedDoc> = test_ids
                .iter()
                .filter_map(|id| by_id.get(id).map(|d| (*d).clone()))
                .collect();
            run_tagger_fold(
                &tagger_cfg,
                &bundle.types,
                &bundle.classes,
                train_docs,
                &test_docs,
                cfg.dev_fraction,
                seed,
            )
            .map_err(|e| EvalError::System(e.to_string()))
        },
    )?;
    Ok(SystemResult {
        name: name.to_string(),
        per_seed,
        aggregate,
    })
}

/// Run every requested system and write `table.txt` and `report.json` to the
/// output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, ExperimentError> {
    cfg.validate()?;
    let bundle = load_bundle(&cfg.corpus_dir, cfg.freq_top_n)?;
    let metas = bundle.doc_metas();
    let split = stratified_folds(&metas, cfg.folds, cfg.fold_seed)?;
    let policy = ConflictPolicy::parse(&cfg.conflict_policy).expect("validated");

    let mut systems = Vec::new();
    for name in &cfg.systems {
        let result = match name.as_str() {
            "terminology" => terminology_system(&bundle, policy)?,
            other => neural_system(other, &bundle, &split, cfg)?,
        };
        systems.push(result);
    }

    let rows: Vec<(String, MultiSeedReport)> = systems
        .iter()
        .map(|s| (s.name.clone(), s.aggregate.clone()))
        .collect();
    let table = render_table(
        &format!(
            "corpus={} folds={} seeds={:?}",
            cfg.corpus_dir.display(),
            cfg.folds,
            cfg.seeds
        ),
        &rows,
    );

    let outcome = ExperimentOutcome {
        config: cfg.clone(),
        systems,
        table: table.clone(),
    };
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("table.txt"), &table)?;
    fs::write(
        cfg.out_dir.join("report.json"),
        serde_json::to_string_pretty(&outcome)?,
    )?;
    Ok(outcome)
}

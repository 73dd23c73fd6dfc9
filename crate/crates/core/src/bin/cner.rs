//! Command-line front end: one subcommand per pipeline stage.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use clinical_ner::annotation::EntityTypeSet;
use clinical_ner::corpus::{load_ann_dir, load_corpus, write_predictions, write_synth_corpus};
use clinical_ner::eval::{aggregate_seeds, evaluate, render_table, stratified_folds};
use clinical_ner::experiment::{carve_dev, load_bundle, run_experiment, ExperimentConfig};
use clinical_ner::gazetteer::ConflictPolicy;
use clinical_ner::synth::{generate_corpus, SynthSpec};
use clinical_ner::tagger::{
    load_embeddings_text, load_model, random_search, save_model, train, SearchSpace, TaggerConfig,
    TaggerModel, Vocab,
};
use clinical_ner::text::{tokenize_document, AbbrevList, NormPolicy, TokenizedDocument};
use clinical_ner::verify::{crf_oracle_check, gradient_suite};
use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

const VERSION_INFO: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (model container v1, experiment report schema v1)"
);

#[derive(Parser)]
#[command(name = "cner", version = VERSION_INFO, about = "Clinical NER toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment and tokenize a text file; one token per line
    /// (surface TAB start TAB end TAB norm), blank line between sentences.
    Tokenize {
        #[arg(long = "in")]
        input: PathBuf,
        /// Abbreviation list, one per line.
        #[arg(long)]
        abbrev: Option<PathBuf>,
    },
    /// Annotate a corpus with the terminology system.
    DictAnnotate {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        freq: Option<PathBuf>,
        /// Treat tokens in the top N of the frequency list as common.
        #[arg(long, default_value_t = 10_000)]
        freq_top_n: usize,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// det or rand:<seed>.
        #[arg(long, default_value = "det")]
        policy: String,
        /// Corpus directory.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_brat: PathBuf,
        /// Comma-separated entity types (default: clinical five).
        #[arg(long)]
        types: Option<String>,
    },
    /// Generate a synthetic corpus.
    Synth {
        /// SynthSpec JSON file (defaults apply for missing fields).
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a tagger on an annotated corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        /// TaggerConfig JSON file (defaults apply for missing fields).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        model_out: PathBuf,
        /// Enable the gazetteer and section features.
        #[arg(long)]
        hybrid: bool,
        /// Pretrained word-embedding text file.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.15)]
        dev_fraction: f64,
        /// Print the default config as JSON and exit.
        #[arg(long)]
        print_default_config: bool,
    },
    /// Predict mentions with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Corpus directory (annotations optional).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_brat: PathBuf,
    },
    /// Score predictions against gold annotations.
    Evaluate {
        /// Corpus directory holding documents and gold .ann files.
        #[arg(long)]
        gold: PathBuf,
        /// Directory of predicted .ann files.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        types: Option<String>,
        /// Write the machine-readable report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Inter-annotator agreement between two annotation directories.
    Agree {
        /// Corpus directory holding the documents.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        types: Option<String>,
    },
    /// Cross-validate one system on an annotated corpus.
    Crossval {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 6)]
        k: usize,
        /// Number of seeds (0..n).
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        /// terminology, pure or hybrid.
        #[arg(long, default_value = "pure")]
        system: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        fold_seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long, default_value = "cner-crossval-out")]
        out: PathBuf,
    },
    /// Random hyperparameter search scored by cross-validation.
    Search {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 8)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// SearchSpace JSON file.
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long)]
        hybrid: bool,
        /// Write best config + trial log here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Verify analytic gradients and CRF inference against oracles.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random CRF instances checked against brute force.
        #[arg(long, default_value_t = 200)]
        crf_instances: usize,
    },
    /// Run a full comparison experiment from a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_types(spec: &Option<String>) -> Result<EntityTypeSet> {
    match spec {
        None => Ok(EntityTypeSet::default_clinical()),
        Some(s) => {
            let names: Vec<String> = s.split(',').map(|t| t.trim().to_string()).collect();
            EntityTypeSet::new(names).context("invalid --types")
        }
    }
}

fn read_json_or_default<T: serde::de::DeserializeOwned + Default>(
    path: &Option<PathBuf>,
) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Tokenize { input, abbrev } => {
            let text = fs::read_to_string(&input)?;
            let abbrevs = match abbrev {
                Some(p) => AbbrevList::from_text(&fs::read_to_string(p)?),
                None => AbbrevList::default(),
            };
            let doc = clinical_ner::text::RawDocument::new("stdin", "unknown", text);
            let tdoc = tokenize_document(doc, &abbrevs, &NormPolicy::matching());
            let mut out = String::new();
            for sent in &tdoc.sentences {
                for t in sent {
                    out.push_str(&format!(
                        "{}\t{}\t{}\t{}\n",
                        t.surface, t.start, t.end, t.norm
                    ));
                }
                out.push('\n');
            }
            print!("{out}");
        }

        Command::DictAnnotate {
            dict,
            freq,
            freq_top_n,
            stopwords,
            policy,
            input,
            out_brat,
            types,
        } => {
            let types = parse_types(&types)?;
            let policy = ConflictPolicy::parse(&policy)
                .with_context(|| format!("bad --policy `{policy}` (det or rand:<seed>)"))?;
            let norm = NormPolicy::matching();
            let mut dictionary = clinical_ner::gazetteer::TermDictionary::from_tsv(
                &fs::read_to_string(&dict)?,
                &types,
                &norm,
            )?;
            if let Some(p) = stopwords {
                dictionary = dictionary.with_stopwords_text(&fs::read_to_string(p)?, &norm);
            }
            if let Some(p) = freq {
                let freq =
                    clinical_ner::gazetteer::FrequencyList::from_tsv(&fs::read_to_string(p)?)?;
                let threshold = freq.top_n_threshold(freq_top_n);
                if threshold != u64::MAX {
                    dictionary =
                        clinical_ner::gazetteer::filter_common_terms(dictionary, &freq, threshold);
                }
            }
            let matcher = clinical_ner::gazetteer::build_matcher(&dictionary, &types);
            let corpus = load_corpus(&input, &types)?;
            let mut predictions = BTreeMap::new();
            for (doc, _) in &corpus.docs {
                let tdoc = tokenize_document(doc.clone(), &AbbrevList::default(), &norm);
                predictions.insert(doc.id.clone(), matcher.annotate(&tdoc, policy));
            }
            write_predictions(&predictions, &out_brat)?;
            let total: usize = predictions.values().map(Vec::len).sum();
            eprintln!(
                "annotated {} documents, {} mentions",
                predictions.len(),
                total
            );
        }

        Command::Synth { spec, out, seed } => {
            let mut spec: SynthSpec = read_json_or_default(&spec)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let corpus = generate_corpus(&spec);
            write_synth_corpus(&corpus, &out)?;
            let mentions: usize = corpus.docs.iter().map(|(_, m)| m.len()).sum();
            eprintln!(
                "wrote {} documents ({} gold mentions) to {}",
                corpus.docs.len(),
                mentions,
                out.display()
            );
        }

        Command::Train {
            corpus,
            config,
            model_out,
            hybrid,
            embeddings,
            seed,
            dev_fraction,
            print_default_config,
        } => {
            if print_default_config {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&TaggerConfig::default())?
                );
                return Ok(());
            }
            let mut tagger_cfg: TaggerConfig = read_json_or_default(&config)?;
            if hybrid {
                tagger_cfg = tagger_cfg.hybrid();
            }
            if let Some(s) = seed {
                tagger_cfg.seed = s;
            }
            let bundle = load_bundle(&corpus, None)?;
            let docs = bundle.prepared_docs(tagger_cfg.use_gazetteer_feature);
            if docs.is_empty() {
                bail!("corpus has no annotated documents");
            }
            let tdocs: Vec<&TokenizedDocument> = docs.iter().map(|d| &d.tdoc).collect();
            let vocab = Vocab::build(&tdocs);
            let mut model = TaggerModel::new(
                tagger_cfg.clone(),
                bundle.types.clone(),
                bundle.classes.clone(),
                vocab,
            )?;
            if let Some(p) = embeddings {
                let map = load_embeddings_text(&fs::read_to_string(p)?, tagger_cfg.word_dim)?;
                let loaded = model.init_word_embeddings(&map);
                eprintln!("initialized {loaded} word vectors from pretrained file");
            }
            let (train_docs, dev_docs) = if tagger_cfg.fixed_epochs.is_some() {
                (docs, Vec::new())
            } else {
                carve_dev(docs, dev_fraction, tagger_cfg.seed)
            };
            let report = train(&mut model, &train_docs, &dev_docs)?;
            save_model(&model, &model_out)?;
            eprintln!(
                "trained {} epochs (best {}), final train loss {:.4}, wall {} ms; model written to {}",
                report.stopped_epoch,
                report.best_epoch,
                report.epoch_train_loss.last().copied().unwrap_or(f64::NAN),
                report.wall_ms,
                model_out.display()
            );
        }

        Command::Predict {
            model,
            input,
            out_brat,
        } => {
            let model = load_model(&model)?;
            let corpus = load_corpus(&input, &model.types)?;
            let needs_features =
                model.config.use_gazetteer_feature || model.config.use_section_feature;
            let bundle = if needs_features {
                Some(load_bundle(&input, None)?)
            } else {
                None
            };
            let mut predictions = BTreeMap::new();
            for (doc, _) in &corpus.docs {
                let tdoc =
                    tokenize_document(doc.clone(), &AbbrevList::default(), &NormPolicy::matching());
                let (gaz, secs);
                if let Some(b) = &bundle {
                    gaz = Some(b.matcher.annotate(&tdoc, ConflictPolicy::Deterministic));
                    let found = clinical_ner::sections::detect_headings(&tdoc, &b.headings);
                    secs = Some(clinical_ner::sections::assign_section_feature(
                        &tdoc, &found,
                    ));
                } else {
                    gaz = None;
                    secs = None;
                }
                let mentions = model.predict(&tdoc, gaz.as_deref(), secs.as_deref())?;
                predictions.insert(doc.id.clone(), mentions);
            }
            write_predictions(&predictions, &out_brat)?;
            eprintln!(
                "predicted {} documents into {}",
                predictions.len(),
                out_brat.display()
            );
        }

        Command::Evaluate {
            gold,
            pred,
            types,
            json,
        } => {
            let types = parse_types(&types)?;
            let corpus = load_corpus(&gold, &types)?;
            let gold_set = corpus.gold_by_id();
            let docs: Vec<clinical_ner::text::RawDocument> = corpus
                .docs
                .iter()
                .filter(|(d, m)| m.is_some() && gold_set.contains_key(&d.id))
                .map(|(d, _)| d.clone())
                .collect();
            let pred_set = load_ann_dir(&pred, &docs, &types)?;
            let report = evaluate(&gold_set, &pred_set, &types)?;
            let agg = aggregate_seeds(std::slice::from_ref(&report))?;
            print!(
                "{}",
                render_table("evaluation", &[("pred".to_string(), agg)])
            );
            if let Some(p) = json {
                fs::write(p, serde_json::to_string_pretty(&report)?)?;
            }
        }

        Command::Agree {
            corpus,
            a,
            b,
            types,
        } => {
            let types = parse_types(&types)?;
            let disk = load_corpus(&corpus, &types)?;
            let docs: Vec<clinical_ner::text::RawDocument> =
                disk.docs.iter().map(|(d, _)| d.clone()).collect();
            let ann_a = load_ann_dir(&a, &docs, &types)?;
            let ann_b = load_ann_dir(&b, &docs, &types)?;
            let report = clinical_ner::eval::agreement(&ann_a, &ann_b, &types)?;
            let agg = aggregate_seeds(std::slice::from_ref(&report))?;
            print!(
                "{}",
                render_table("inter-annotator agreement", &[("b-vs-a".to_string(), agg)])
            );
        }

        Command::Crossval {
            corpus,
            k,
            seeds,
            system,
            config,
            fold_seed,
            json,
            out,
        } => {
            let cfg = ExperimentConfig {
                corpus_dir: corpus,
                systems: vec![system],
                seeds: (0..seeds as u64).collect(),
                folds: k,
                fold_seed,
                tagger: read_json_or_default(&config)?,
                out_dir: out,
                ..Default::default()
            };
            let outcome = run_experiment(&cfg)?;
            print!("{}", outcome.table);
            if let Some(p) = json {
                fs::write(p, serde_json::to_string_pretty(&outcome)?)?;
            }
        }

        Command::Search {
            corpus,
            budget,
            seed,
            k,
            space,
            hybrid,
            json,
        } => {
            let space: SearchSpace = read_json_or_default(&space)?;
            let bundle = load_bundle(&corpus, None)?;
            let base = if hybrid {
                TaggerConfig::small().hybrid()
            } else {
                TaggerConfig::small()
            };
            let docs = bundle.prepared_docs(hybrid);
            let metas = bundle.doc_metas();
            let split = stratified_folds(&metas, k, seed)?;
            let (best, trials) = random_search(
                &space,
                &base,
                &docs,
                &split,
                &bundle.types,
                &bundle.classes,
                budget,
                seed,
            )?;
            for (i, t) in trials.iter().enumerate() {
                println!(
                    "trial {i}: cv exact-F {:.4}  hidden={} layers={} char_emb={} filters={} lr={} l2={}",
                    t.cv_exact_f,
                    t.config.hidden_dim,
                    t.config.num_gru_layers,
                    t.config.char_emb_dim,
                    t.config.char_filters,
                    t.config.lr,
                    t.config.l2_lambda
                );
            }
            println!("best config:\n{}", serde_json::to_string_pretty(&best)?);
            if let Some(p) = json {
                #[derive(serde::Serialize)]
                struct SearchOutput {
                    best: TaggerConfig,
                    trials: Vec<clinical_ner::tagger::TrialResult>,
                }
                fs::write(
                    p,
                    serde_json::to_string_pretty(&SearchOutput { best, trials })?,
                )?;
            }
        }

        Command::Gradcheck {
            seed,
            crf_instances,
        } => {
            let oracle = crf_oracle_check(crf_instances, seed);
            println!(
                "crf_oracle: {} instances, max |logZ - brute| = {:.3e}, max |viterbi - brute| = {:.3e}, tag mismatches = {}",
                oracle.n_instances,
                oracle.max_logz_err,
                oracle.max_viterbi_score_err,
                oracle.viterbi_tag_mismatches
            );
            let mut failed = oracle.max_logz_err >= 1e-9 || oracle.viterbi_tag_mismatches > 0;
            for entry in gradient_suite(seed) {
                println!(
                    "{:<18} max rel err {:.3e}  (tolerance {:.0e})  {}",
                    entry.name,
                    entry.max_rel_err,
                    entry.tolerance,
                    if entry.passed() { "ok" } else { "FAIL" }
                );
                failed |= !entry.passed();
            }
            if failed {
                bail!("gradient/oracle checks failed");
            }
        }

        Command::Experiment { config } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg: ExperimentConfig = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", config.display()))?;
            let outcome = run_experiment(&cfg)?;
            print!("{}", outcome.table);
            eprintln!("report written to {}", cfg.out_dir.display());
        }
    }
    Ok(())
}

//! On-disk corpus layout shared by the CLI pipelines.
//!
//! ```text
//! corpus/
//!   corpus.tsv          # doc id TAB doc type
//!   docs/<id>.txt       # raw text, UTF-8
//!   docs/<id>.ann       # BRAT textbound annotations (optional per doc)
//!   dictionary.tsv      # term TAB type [TAB source]
//!   headings.tsv        # heading TAB section class
//!   stopwords.txt
//!   frequencies.tsv     # token TAB count
//!   abbreviations.txt
//! ```

use crate::annotation::{read_brat, write_brat, AnnotationError, EntityMention, EntityTypeSet};
use crate::synth::SynthCorpus;
use crate::text::RawDocument;
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Annotation {
        path: String,
        source: AnnotationError,
    },
    #[error("corpus manifest line {line}: expected `id TAB doc_type`")]
    BadManifest { line: usize },
}

fn read_file(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, content: &str) -> Result<(), CorpusError> {
    fs::write(path, content).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// A corpus loaded from disk. Annotations are present only for documents
/// with an `.ann` sidecar.
#[derive(Debug, Clone)]
pub struct DiskCorpus {
    pub docs: Vec<(RawDocument, Option<Vec<EntityMention>>)>,
}

impl DiskCorpus {
    /// Documents that have gold annotations.
    pub fn annotated(&self) -> Vec<(RawDocument, Vec<EntityMention>)> {
        self.docs
            .iter()
            .filter_map(|(d, m)| m.as_ref().map(|m| (d.clone(), m.clone())))
            .collect()
    }

    pub fn gold_by_id(&self) -> BTreeMap<String, Vec<EntityMention>> {
        self.docs
            .iter()
            .filter_map(|(d, m)| m.as_ref().map(|m| (d.id.clone(), m.clone())))
            .collect()
    }
}

/// Load documents (and annotations where present) from a corpus directory.
/// Documents are ordered by the manifest; without a manifest, `docs/*.txt`
/// is read in sorted order with doc type `unknown`.
pub fn load_corpus(dir: &Path, types: &EntityTypeSet) -> Result<DiskCorpus, CorpusError> {
    let manifest_path = dir.join("corpus.tsv");
    let docs_dir = dir.join("docs");
    let mut entries: Vec<(String, String)> = Vec::new();
    if manifest_path.exists() {
        let manifest = read_file(&manifest_path)?;
        for (lineno, line) in manifest.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (id, ty) = line
                .split_once('\t')
                .ok_or(CorpusError::BadManifest { line: lineno + 1 })?;
            entries.push((id.to_string(), ty.to_string()));
        }
    } else {
        let mut ids: Vec<String> = fs::read_dir(&docs_dir)
            .map_err(|source| CorpusError::Io {
                path: docs_dir.display().to_string(),
                source,
            })?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().to_string_lossy().to_string();
                name.strip_suffix(".txt").map(String::from)
            })
            .collect();
        ids.sort();
        entries = ids
            .into_iter()
            .map(|id| (id, "unknown".to_string()))
            .collect();
    }

    let mut docs = Vec::with_capacity(entries.len());
    for (id, doc_type) in entries {
        let txt_path = docs_dir.join(format!("{id}.txt"));
        let text = read_file(&txt_path)?;
        let doc = RawDocument::new(id.clone(), doc_type, text);
        let ann_path = docs_dir.join(format!("{id}.ann"));
        let mentions = if ann_path.exists() {
            let ann = read_file(&ann_path)?;
            let brat = read_brat(&ann, &doc, types).map_err(|source| CorpusError::Annotation {
                path: ann_path.display().to_string(),
                source,
            })?;
            Some(brat.mentions)
        } else {
            None
        };
        docs.push((doc, mentions));
    }
    Ok(DiskCorpus { docs })
}

/// Write a generated corpus with all its resource files.
pub fn write_synth_corpus(corpus: &SynthCorpus, dir: &Path) -> Result<(), CorpusError> {
    let docs_dir = dir.join("docs");
    fs::create_dir_all(&docs_dir).map_err(|source| CorpusError::Io {
        path: docs_dir.display().to_string(),
        source,
    })?;
    let mut manifest = String::new();
    for (doc, mentions) in &corpus.docs {
        manifest.push_str(&format!("{}\t{}\n", doc.id, doc.doc_type));
        write_file(&docs_dir.join(format!("{}.txt", doc.id)), &doc.text)?;
        write_file(
            &docs_dir.join(format!("{}.ann", doc.id)),
            &write_brat(mentions),
        )?;
    }
    write_file(&dir.join("corpus.tsv"), &manifest)?;
    write_file(&dir.join("dictionary.tsv"), &corpus.dictionary_tsv)?;
    write_file(
        &dir.join("dictionary_full.tsv"),
        &corpus.full_dictionary_tsv,
    )?;
    write_file(&dir.join("headings.tsv"), &corpus.heading_lexicon_tsv)?;
    write_file(&dir.join("stopwords.txt"), &corpus.stopwords_txt)?;
    write_file(&dir.join("frequencies.tsv"), &corpus.frequencies_tsv)?;
    write_file(&dir.join("abbreviations.txt"), &corpus.abbreviations_txt)?;
    write_file(
        &dir.join("entity_types.txt"),
        &corpus
            .entity_types
            .names()
            .iter()
            .map(|n| format!("{n}\n"))
            .collect::<String>(),
    )?;
    Ok(())
}

/// Write predicted mentions as one `.ann` file per document.
pub fn write_predictions(
    predictions: &BTreeMap<String, Vec<EntityMention>>,
    dir: &Path,
) -> Result<(), CorpusError> {
    fs::create_dir_all(dir).map_err(|source| CorpusError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for (id, mentions) in predictions {
        write_file(&dir.join(format!("{id}.ann")), &write_brat(mentions))?;
    }
    Ok(())
}

/// Load `.ann` files from a directory, pairing them with the documents of a
/// corpus (for `evaluate --gold ... --pred ...`).
pub fn load_ann_dir(
    dir: &Path,
    docs: &[RawDocument],
    types: &EntityTypeSet,
) -> Result<BTreeMap<String, Vec<EntityMention>>, CorpusError> {
    let mut out = BTreeMap::new();
    for doc in docs {
        let path = dir.join(format!("{}.ann", doc.id));
        let ann = if path.exists() {
            read_file(&path)?
        } else {
            String::new()
        };
        let brat = read_brat(&ann, doc, types).map_err(|source| CorpusError::Annotation {
            path: path.display().to_string(),
            source,
        })?;
        out.insert(doc.id.clone(), brat.mentions);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_corpus, SynthSpec};

    #[test]
    fn synth_corpus_round_trips_through_disk() {
        let spec = SynthSpec {
            n_docs: 4,
            background_vocab: 40,
            terms_per_type: 5,
            seed: 2,
            ..Default::default()
        };
        let corpus = generate_corpus(&spec);
        let dir = tempfile::tempdir().unwrap();
        write_synth_corpus(&corpus, dir.path()).unwrap();
        let loaded = load_corpus(dir.path(), &corpus.entity_types).unwrap();
        assert_eq!(loaded.docs.len(), 4);
        for ((doc, mentions), (ldoc, lmentions)) in corpus.docs.iter().zip(&loaded.docs) {
            assert_eq!(doc, ldoc);
            let mut sorted = mentions.clone();
            crate::annotation::sort_mentions(&mut sorted);
            assert_eq!(lmentions.as_ref().unwrap(), &sorted);
        }
    }

    #[test]
    fn missing_ann_loads_as_unannotated() {
        let spec = SynthSpec {
            n_docs: 2,
            background_vocab: 30,
            terms_per_type: 4,
            seed: 3,
            ..Default::default()
        };
        let corpus = generate_corpus(&spec);
        let dir = tempfile::tempdir().unwrap();
        write_synth_corpus(&corpus, dir.path()).unwrap();
        fs::remove_file(dir.path().join("docs/doc-0000.ann")).unwrap();
        let loaded = load_corpus(dir.path(), &corpus.entity_types).unwrap();
        assert!(loaded.docs[0].1.is_none());
        assert!(loaded.docs[1].1.is_some());
    }
}

//! Seeded synthetic-corpus generator.
//!
//! Documents are built from pseudo-word vocabularies with dictionary terms
//! planted as gold mentions, optional section headings, and controllable
//! surface noise. Token inventories are disjoint (background words never
//! collide with term tokens, term tokens are never reused), so on a
//! noise-free corpus the terminology system reaches precision = recall = 1
//! by construction, while misspelling noise creates gold mentions the
//! dictionary cannot match.

use crate::annotation::{EntityMention, EntityTypeSet};
use crate::sections::SectionClasses;
use crate::text::{normalize_token, strip_diacritics, NormPolicy, RawDocument};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_docs: usize,
    /// (doc type, weight) pairs.
    pub doc_type_mix: Vec<(String, f64)>,
    pub sentences_per_doc: (usize, usize),
    pub background_vocab: usize,
    pub entity_types: Vec<String>,
    pub terms_per_type: usize,
    /// Probability per sentence of planting a mention, per entity type.
    pub plant_rate: Vec<f64>,
    /// Fraction of planted mentions whose surface is perturbed.
    pub noise_rate: f64,
    /// Fraction of the generated term list included in the emitted
    /// dictionary TSV.
    pub dict_coverage: f64,
    /// Probability of inserting a section heading before a sentence.
    pub heading_rate: f64,
    /// How strongly entity types prefer their home section (0 = none).
    pub section_affinity: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let types = EntityTypeSet::default_clinical();
        SynthSpec {
            n_docs: 50,
            doc_type_mix: vec![
                ("discharge_summary".into(), 0.4),
                ("letter".into(), 0.3),
                ("operating_report".into(), 0.15),
                ("exam_report".into(), 0.15),
            ],
            sentences_per_doc: (4, 10),
            background_vocab: 300,
            entity_types: types.names().to_vec(),
            terms_per_type: 30,
            plant_rate: vec![0.25; types.len()],
            noise_rate: 0.0,
            dict_coverage: 1.0,
            heading_rate: 0.15,
            section_affinity: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub docs: Vec<(RawDocument, Vec<EntityMention>)>,
    /// Term TSV restricted to `dict_coverage`.
    pub dictionary_tsv: String,
    /// Every generated term (internal reference for oracle experiments).
    pub full_dictionary_tsv: String,
    pub heading_lexicon_tsv: String,
    pub stopwords_txt: String,
    pub frequencies_tsv: String,
    pub abbreviations_txt: String,
    pub entity_types: EntityTypeSet,
    pub section_classes: SectionClasses,
}

const GLUE_WORDS: [&str; 8] = ["the", "of", "and", "with", "was", "on", "for", "at"];

const HEADINGS: [(&str, &str); 6] = [
    ("History", "HISTORY"),
    ("Medications", "MEDICATIONS"),
    ("Examination", "EXAM"),
    ("Labs", "LABS"),
    ("Imaging", "IMAGING"),
    ("Plan", "PLAN"),
];

fn make_word(rng: &mut ChaCha8Rng, syllables: usize) -> String {
    const ONSETS: [&str; 12] = ["b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t"];
    const NUCLEI: [&str; 6] = ["a", "e", "i", "o", "u", "ou"];
    const CODAS: [&str; 5] = ["", "n", "r", "l", "s"];
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
        w.push_str(NUCLEI[rng.gen_range(0..NUCLEI.len())]);
    }
    w.push_str(CODAS[rng.gen_range(0..CODAS.len())]);
    w
}

fn fresh_word(
    rng: &mut ChaCha8Rng,
    syllables: std::ops::RangeInclusive<usize>,
    used: &mut HashSet<String>,
) -> String {
    loop {
        let s = rng.gen_range(*syllables.start()..=*syllables.end());
        let w = make_word(rng, s);
        // Uniqueness is checked on the folded form so accents can never
        // create colliding normalized tokens.
        if used.insert(strip_diacritics(&w)) {
            return w;
        }
    }
}

fn maybe_accent(word: &str, rng: &mut ChaCha8Rng) -> String {
    if rng.gen::<f64>() >= 0.2 {
        return word.to_string();
    }
    let mut out = String::new();
    let mut done = false;
    for c in word.chars() {
        if !done && c == 'e' {
            out.push('é');
            done = true;
        } else {
            out.push(c);
        }
    }
    out
}

#[derive(Debug, Clone)]
struct Term {
    tokens: Vec<String>,
    etype_idx: usize,
}

impl Term {
    fn surface(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Home section class id for an entity type (round-robin over the user
/// classes, skipping NONE).
fn home_section(etype_idx: usize, classes: &SectionClasses) -> usize {
    1 + etype_idx % (classes.len() - 1)
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

struct DocBuilder {
    text: String,
    /// Position in Unicode scalar values.
    pos: usize,
    mentions: Vec<EntityMention>,
}

impl DocBuilder {
    fn new() -> Self {
        DocBuilder {
            text: String::new(),
            pos: 0,
            mentions: Vec::new(),
        }
    }

    fn push_str(&mut self, s: &str) {
        self.text.push_str(s);
        self.pos += s.chars().count();
    }

    fn push_mention(&mut self, surface: &str, etype: &str) {
        let start = self.pos;
        self.push_str(surface);
        self.mentions
            .push(EntityMention::new(etype, start, self.pos, surface));
    }
}

/// Number of dictionary entries kept to reach `coverage` (at least one when
/// any terms exist).
fn coverage_count(total: usize, coverage: f64) -> usize {
    ((total as f64 * coverage).round() as usize).clamp(usize::from(total > 0), total)
}

pub fn generate_corpus(spec: &SynthSpec) -> SynthCorpus {
    assert_eq!(
        spec.entity_types.len(),
        spec.plant_rate.len(),
        "plant_rate must align with entity_types"
    );
    let types = EntityTypeSet::new(spec.entity_types.clone()).expect("valid entity types");
    let classes = SectionClasses::default_clinical();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Token inventories. `used` spans background and term tokens so the two
    // can never produce the same normalized token.
    let mut used: HashSet<String> = GLUE_WORDS.iter().map(|s| s.to_string()).collect();
    for (h, _) in HEADINGS {
        used.insert(h.to_lowercase());
    }
    let background: Vec<String> = (0..spec.background_vocab)
        .map(|_| fresh_word(&mut rng, 2..=3, &mut used))
        .collect();
    let mut terms: Vec<Term> = Vec::new();
    for etype_idx in 0..types.len() {
        for _ in 0..spec.terms_per_type {
            let n_tokens = 1 + rng.gen_range(0..3).min(rng.gen_range(0..2)); // mostly unigrams
            let tokens: Vec<String> = (0..n_tokens)
                .map(|_| {
                    let w = fresh_word(&mut rng, 2..=4, &mut used);
                    maybe_accent(&w, &mut rng)
                })
                .collect();
            terms.push(Term { tokens, etype_idx });
        }
    }
    let dict_keys: HashSet<Vec<String>> = terms
        .iter()
        .map(|t| {
            t.tokens
                .iter()
                .map(|w| normalize_token(w, &NormPolicy::matching()))
                .collect()
        })
        .collect();

    // Documents.
    let mut docs = Vec::with_capacity(spec.n_docs);
    let weight_total: f64 = spec.doc_type_mix.iter().map(|(_, w)| w).sum();
    for doc_idx in 0..spec.n_docs {
        let mut pick = rng.gen::<f64>() * weight_total;
        let mut doc_type = spec.doc_type_mix[0].0.clone();
        for (ty, w) in &spec.doc_type_mix {
            if pick < *w {
                doc_type = ty.clone();
                break;
            }
            pick -= w;
        }

        let mut b = DocBuilder::new();
        let n_sent = rng.gen_range(spec.sentences_per_doc.0..=spec.sentences_per_doc.1);
        let mut current_section = 0usize; // NONE
        for si in 0..n_sent {
            if rng.gen::<f64>() < spec.heading_rate {
                let (heading, class) = HEADINGS[rng.gen_range(0..HEADINGS.len())];
                if si > 0 {
                    b.push_str("\n\n");
                }
                b.push_str(heading);
                b.push_str(":\n\n");
                current_section = classes.index_of(class).expect("known class");
            } else if si > 0 {
                b.push_str(" ");
            }

            // Decide plantings for this sentence.
            let mut planted: Vec<&Term> = Vec::new();
            for (etype_idx, &rate) in spec.plant_rate.iter().enumerate() {
                let at_home = current_section == home_section(etype_idx, &classes);
                let eff = if at_home {
                    rate * (1.0 + spec.section_affinity)
                } else {
                    rate * (1.0 - spec.section_affinity)
                };
                if rng.gen::<f64>() < eff {
                    let of_type: Vec<&Term> =
                        terms.iter().filter(|t| t.etype_idx == etype_idx).collect();
                    planted.push(of_type[rng.gen_range(0..of_type.len())]);
                }
            }

            let n_background = rng.gen_range(5..=11);
            // Mentions go after background word i (never sentence-initial,
            // so capitalization cannot touch a mention surface).
            let mut slots: Vec<usize> = (1..=n_background).collect();
            slots.shuffle(&mut rng);
            let mut plant_at: Vec<(usize, &Term)> = planted
                .iter()
                .enumerate()
                .map(|(i, t)| (slots[i % slots.len()], *t))
                .collect();
            plant_at.sort_by_key(|(slot, _)| *slot);

            let mut emitted = 0usize;
            for w in 0..n_background {
                let word = if rng.gen::<f64>() < 0.12 {
                    GLUE_WORDS[rng.gen_range(0..GLUE_WORDS.len())].to_string()
                } else if rng.gen::<f64>() < 0.06 {
                    format!("{}", rng.gen_range(1..500))
                } else {
                    background[rng.gen_range(0..background.len())].clone()
                };
                let word = if w == 0 { capitalize(&word) } else { word };
                if w > 0 {
                    b.push_str(" ");
                }
                b.push_str(&word);
                while emitted < plant_at.len() && plant_at[emitted].0 == w + 1 {
                    let term = plant_at[emitted].1;
                    let surface =
                        noisy_surface(&term.surface(), spec.noise_rate, &dict_keys, &mut rng);
                    b.push_str(" ");
                    b.push_mention(&surface, types.name(term.etype_idx));
                    emitted += 1;
                }
            }
            b.push_str(".");
        }

        docs.push((
            RawDocument::new(format!("doc-{doc_idx:04}"), doc_type, b.text),
            b.mentions,
        ));
    }

    // Emitted resources.
    let mut dictionary_tsv = String::new();
    let mut full_dictionary_tsv = String::new();
    for etype_idx in 0..types.len() {
        let of_type: Vec<&Term> = terms.iter().filter(|t| t.etype_idx == etype_idx).collect();
        let keep = coverage_count(of_type.len(), spec.dict_coverage);
        let mut order: Vec<usize> = (0..of_type.len()).collect();
        order.shuffle(&mut rng);
        let kept: HashSet<usize> = order.into_iter().take(keep).collect();
        for (ti, term) in of_type.iter().enumerate() {
            let line = format!("{}\t{}\tsynth\n", term.surface(), types.name(etype_idx));
            full_dictionary_tsv.push_str(&line);
            if kept.contains(&ti) {
                dictionary_tsv.push_str(&line);
            }
        }
    }

    let heading_lexicon_tsv: String = HEADINGS
        .iter()
        .map(|(h, c)| format!("{h}\t{c}\n"))
        .collect();
    let stopwords_txt: String = GLUE_WORDS.iter().map(|w| format!("{w}\n")).collect();
    let mut frequencies_tsv = String::new();
    for (i, w) in GLUE_WORDS.iter().enumerate() {
        frequencies_tsv.push_str(&format!("{w}\t{}\n", 1_000_000 - i as u64));
    }
    for (i, w) in background.iter().enumerate() {
        frequencies_tsv.push_str(&format!("{w}\t{}\n", 10_000 - (i as u64 % 9_000)));
    }
    let abbreviations_txt = "Dr\nPr\nM\nMme\nMlle\nmg\nml\ncf\nvs\n".to_string();

    SynthCorpus {
        docs,
        dictionary_tsv,
        full_dictionary_tsv,
        heading_lexicon_tsv,
        stopwords_txt,
        frequencies_tsv,
        abbreviations_txt,
        entity_types: types,
        section_classes: classes,
    }
}

/// Apply surface noise to a planted mention with probability `noise_rate`.
/// Misspelling (the only operation that defeats normalized matching) is
/// weighted highest; case flips and accent stripping leave the normalized
/// form intact but still vary the surface.
fn noisy_surface(
    surface: &str,
    noise_rate: f64,
    dict_keys: &HashSet<Vec<String>>,
    rng: &mut ChaCha8Rng,
) -> String {
    if noise_rate == 0.0 || rng.gen::<f64>() >= noise_rate {
        return surface.to_string();
    }
    let op = rng.gen::<f64>();
    if op < 0.6 {
        // Misspell one alphabetic character; reroll if the result still
        // normalizes to a dictionary key.
        for _ in 0..5 {
            let chars: Vec<char> = surface.chars().collect();
            let letter_positions: Vec<usize> = chars
                .iter()
                .enumerate()
                .filter(|(_, c)| c.is_alphabetic())
                .map(|(i, _)| i)
                .collect();
            let pos = letter_positions[rng.gen_range(0..letter_positions.len())];
            let replacement = (b'a' + rng.gen_range(0..26u8)) as char;
            if chars[pos] == replacement {
                continue;
            }
            let mut out: Vec<char> = chars;
            out[pos] = replacement;
            let candidate: String = out.into_iter().collect();
            let key: Vec<String> = candidate
                .split(' ')
                .map(|t| normalize_token(t, &NormPolicy::matching()))
                .collect();
            if !dict_keys.contains(&key) {
                return candidate;
            }
        }
        surface.to_string()
    } else if op < 0.8 {
        surface.to_uppercase()
    } else {
        strip_diacritics(surface)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::encode_document;
    use crate::text::{tokenize_document, AbbrevList};

    fn small_spec() -> SynthSpec {
        SynthSpec {
            n_docs: 8,
            background_vocab: 60,
            terms_per_type: 8,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn generation_is_byte_identical_under_seed() {
        let a = generate_corpus(&small_spec());
        let b = generate_corpus(&small_spec());
        assert_eq!(a.dictionary_tsv, b.dictionary_tsv);
        assert_eq!(a.docs.len(), b.docs.len());
        for ((da, ma), (db, mb)) in a.docs.iter().zip(&b.docs) {
            assert_eq!(da, db);
            assert_eq!(ma, mb);
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate_corpus(&small_spec());
        let mut spec = small_spec();
        spec.seed = 6;
        let b = generate_corpus(&spec);
        assert_ne!(a.docs[0].0.text, b.docs[0].0.text);
    }

    #[test]
    fn mention_offsets_match_document_slices() {
        let corpus = generate_corpus(&small_spec());
        let mut total = 0;
        for (doc, mentions) in &corpus.docs {
            for m in mentions {
                assert_eq!(crate::text::slice_chars(&doc.text, m.start, m.end), m.text);
                total += 1;
            }
        }
        assert!(
            total > 10,
            "expected a nontrivial number of mentions, got {total}"
        );
    }

    #[test]
    fn gold_mentions_align_with_tokenizer() {
        // Every planted mention must start/end on token boundaries of the
        // standard pipeline, in every document.
        let mut spec = small_spec();
        spec.noise_rate = 0.3;
        spec.n_docs = 12;
        let corpus = generate_corpus(&spec);
        for (doc, mentions) in &corpus.docs {
            let tdoc =
                tokenize_document(doc.clone(), &AbbrevList::default(), &NormPolicy::matching());
            encode_document(&tdoc, mentions, &corpus.entity_types).unwrap();
        }
    }

    #[test]
    fn plant_rate_zero_gives_no_mentions() {
        let mut spec = small_spec();
        spec.plant_rate = vec![0.0; spec.entity_types.len()];
        let corpus = generate_corpus(&spec);
        assert!(corpus.docs.iter().all(|(_, m)| m.is_empty()));
    }

    #[test]
    fn coverage_restricts_emitted_dictionary() {
        let mut spec = small_spec();
        spec.dict_coverage = 0.5;
        let corpus = generate_corpus(&spec);
        let full = corpus.full_dictionary_tsv.lines().count();
        let sub = corpus.dictionary_tsv.lines().count();
        assert!(sub < full);
        assert_eq!(sub, spec.entity_types.len() * 4); // 8 per type, half kept
        let full_set: HashSet<&str> = corpus.full_dictionary_tsv.lines().collect();
        assert!(corpus.dictionary_tsv.lines().all(|l| full_set.contains(l)));
    }

    #[test]
    fn headings_are_their_own_sentences() {
        let mut spec = small_spec();
        spec.heading_rate = 0.9;
        spec.n_docs = 3;
        let corpus = generate_corpus(&spec);
        let mut found_heading = false;
        for (doc, _) in &corpus.docs {
            let tdoc =
                tokenize_document(doc.clone(), &AbbrevList::default(), &NormPolicy::matching());
            let lex = crate::sections::HeadingLexicon::from_tsv(
                &corpus.heading_lexicon_tsv,
                corpus.section_classes.clone(),
            )
            .unwrap();
            if !crate::sections::detect_headings(&tdoc, &lex).is_empty() {
                found_heading = true;
            }
        }
        assert!(found_heading);
    }
}

//! The terminology-based system: typed term lists compiled into a normalized
//! token-level matching automaton, with frequency-based filtering of common
//! terms and resolution of overlapping matches.
//!
//! Matching is case-insensitive and accent-insensitive (both sides use the
//! same [`NormPolicy`]), tolerates up to two consecutive stopword tokens
//! between entry tokens, and is bounded by sentence spans.

use crate::annotation::{sort_mentions, EntityMention, EntityTypeSet};
use crate::text::{normalize_token, slice_chars, tokenize, NormPolicy, TokenizedDocument};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use thiserror::Error;

/// Maximum consecutive stopword tokens skipped between entry tokens.
const MAX_STOPWORD_SKIP: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum GazetteerError {
    #[error("line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("line {line}: unknown entity type `{name}`")]
    UnknownEntityType { line: usize, name: String },
}

/// One dictionary entry: a normalized token sequence with its type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TermEntry {
    pub tokens: Vec<String>,
    pub etype: String,
    pub source: Option<String>,
}

/// A typed term list plus the stopword set used during matching.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TermDictionary {
    entries: Vec<TermEntry>,
    stopwords: BTreeSet<String>,
}

impl TermDictionary {
    /// Load a TSV term list (`term TAB entity-type [TAB source]`). Terms are
    /// tokenized and normalized with `policy`; duplicate (tokens, type) pairs
    /// collapse to one entry.
    pub fn from_tsv(
        tsv: &str,
        types: &EntityTypeSet,
        policy: &NormPolicy,
    ) -> Result<Self, GazetteerError> {
        let mut seen: HashSet<(Vec<String>, String)> = HashSet::new();
        let mut entries = Vec::new();
        for (lineno, line) in tsv.lines().enumerate() {
            let lineno = lineno + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 2 || cols.len() > 3 {
                return Err(GazetteerError::ParseError {
                    line: lineno,
                    msg: format!("expected 2 or 3 tab-separated columns, got {}", cols.len()),
                });
            }
            let term = cols[0].trim();
            if term.is_empty() {
                return Err(GazetteerError::ParseError {
                    line: lineno,
                    msg: "empty term".into(),
                });
            }
            let etype = cols[1].trim();
            if types.index_of(etype).is_none() {
                return Err(GazetteerError::UnknownEntityType {
                    line: lineno,
                    name: etype.to_string(),
                });
            }
            let tokens: Vec<String> = tokenize(term, (0, term.chars().count()), policy)
                .into_iter()
                .map(|t| t.norm)
                .collect();
            if tokens.is_empty() {
                return Err(GazetteerError::ParseError {
                    line: lineno,
                    msg: "term has no tokens".into(),
                });
            }
            if seen.insert((tokens.clone(), etype.to_string())) {
                entries.push(TermEntry {
                    tokens,
                    etype: etype.to_string(),
                    source: cols
                        .get(2)
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty()),
                });
            }
        }
        entries.sort();
        Ok(TermDictionary {
            entries,
            stopwords: BTreeSet::new(),
        })
    }

    /// Attach a stopword set (normalized with the same policy as matching).
    /// Entries consisting solely of stopwords are dropped, per the dictionary
    /// invariant.
    pub fn with_stopwords<I: IntoIterator<Item = String>>(mut self, stopwords: I) -> Self {
        self.stopwords = stopwords.into_iter().collect();
        let sw = self.stopwords.clone();
        self.entries
            .retain(|e| e.tokens.iter().any(|t| !sw.contains(t)));
        self
    }

    /// One stopword per line.
    pub fn with_stopwords_text(self, text: &str, policy: &NormPolicy) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|w| normalize_token(w, policy));
        self.with_stopwords(words)
    }

    pub fn entries(&self) -> &[TermEntry] {
        &self.entries
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Matching key of an entry: its tokens with stopwords removed.
    pub fn matching_key(&self, entry: &TermEntry) -> Vec<String> {
        entry
            .tokens
            .iter()
            .filter(|t| !self.stopwords.contains(*t))
            .cloned()
            .collect()
    }

    /// Set of all (matching key, type) pairs; the soundness reference for
    /// emitted mentions.
    pub fn matching_keys(&self) -> HashSet<(Vec<String>, String)> {
        self.entries
            .iter()
            .map(|e| (self.matching_key(e), e.etype.clone()))
            .collect()
    }
}

/// Token frequency counts from a large general-domain corpus.
#[derive(Debug, Clone, Default)]
pub struct FrequencyList {
    counts: HashMap<String, u64>,
}

impl FrequencyList {
    pub fn new(counts: HashMap<String, u64>) -> Self {
        FrequencyList { counts }
    }

    /// TSV with `token TAB count` per line.
    pub fn from_tsv(tsv: &str) -> Result<Self, GazetteerError> {
        let mut counts = HashMap::new();
        for (lineno, line) in tsv.lines().enumerate() {
            let lineno = lineno + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (tok, cnt) = line
                .split_once('\t')
                .ok_or_else(|| GazetteerError::ParseError {
                    line: lineno,
                    msg: "expected `token TAB count`".into(),
                })?;
            let cnt: u64 = cnt.trim().parse().map_err(|_| GazetteerError::ParseError {
                line: lineno,
                msg: format!("bad count `{cnt}`"),
            })?;
            counts.insert(tok.to_string(), cnt);
        }
        Ok(FrequencyList { counts })
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    /// Count of the n-th most frequent token; tokens with at least this
    /// count are "common". Returns `u64::MAX` when the list has fewer than
    /// `n` tokens (nothing is common).
    pub fn top_n_threshold(&self, n: usize) -> u64 {
        if n == 0 || self.counts.len() < n {
            return u64::MAX;
        }
        let mut counts: Vec<u64> = self.counts.values().copied().collect();
        counts.sort_unstable_by(|a, b| b.cmp(a));
        counts[n - 1]
    }
}

/// Remove single-token entries whose token frequency is at least
/// `threshold`. Multi-token entries are kept regardless.
pub fn filter_common_terms(
    dict: TermDictionary,
    freq: &FrequencyList,
    threshold: u64,
) -> TermDictionary {
    assert!(threshold > 0, "threshold must be positive");
    let TermDictionary { entries, stopwords } = dict;
    let entries = entries
        .into_iter()
        .filter(|e| e.tokens.len() > 1 || freq.count(&e.tokens[0]) < threshold)
        .collect();
    TermDictionary { entries, stopwords }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrieNode {
    children: BTreeMap<String, usize>,
    /// (type index, key length, source) for entries accepted at this node.
    accepts: Vec<(usize, usize, Option<String>)>,
}

/// Immutable token-trie matcher over stopword-free normalized entry keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatcherAutomaton {
    nodes: Vec<TrieNode>,
    stopwords: BTreeSet<String>,
    types: EntityTypeSet,
}

/// How overlapping candidate mentions are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictPolicy {
    /// Longest span, then leftmost, then smallest entity-type index.
    Deterministic,
    /// Random pick among conflicting candidates, reproducible under the seed.
    SeededRandom(u64),
}

impl ConflictPolicy {
    /// Parse `det` or `rand:<seed>`.
    pub fn parse(s: &str) -> Option<ConflictPolicy> {
        if s == "det" {
            Some(ConflictPolicy::Deterministic)
        } else {
            let seed = s.strip_prefix("rand:")?.parse().ok()?;
            Some(ConflictPolicy::SeededRandom(seed))
        }
    }
}

/// Compile the dictionary into a matching automaton. Deterministic: the trie
/// depends only on the entry set, not on load order.
pub fn build_matcher(dict: &TermDictionary, types: &EntityTypeSet) -> MatcherAutomaton {
    let mut nodes = vec![TrieNode {
        children: BTreeMap::new(),
        accepts: Vec::new(),
    }];
    for entry in dict.entries() {
        let key = dict.matching_key(entry);
        if key.is_empty() {
            continue;
        }
        let type_idx = match types.index_of(&entry.etype) {
            Some(i) => i,
            None => continue,
        };
        let mut node = 0;
        for tok in &key {
            node = match nodes[node].children.get(tok) {
                Some(&next) => next,
                None => {
                    let next = nodes.len();
                    nodes.push(TrieNode {
                        children: BTreeMap::new(),
                        accepts: Vec::new(),
                    });
                    nodes[node].children.insert(tok.clone(), next);
                    next
                }
            };
        }
        let accept = (type_idx, key.len(), entry.source.clone());
        if !nodes[node].accepts.contains(&accept) {
            nodes[node].accepts.push(accept);
        }
    }
    for n in &mut nodes {
        n.accepts
            .sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));
    }
    MatcherAutomaton {
        nodes,
        stopwords: dict.stopwords().clone(),
        types: types.clone(),
    }
}

impl MatcherAutomaton {
    pub fn types(&self) -> &EntityTypeSet {
        &self.types
    }

    /// All dictionary matches in one sentence (before conflict resolution).
    /// Returns (first token index, last token index, entity type index).
    fn match_sentence(&self, norms: &[&str]) -> Vec<(usize, usize, usize)> {
        let mut found = Vec::new();
        for i in 0..norms.len() {
            let mut node = 0usize;
            let mut skipped = 0usize;
            let mut consumed_any = false;
            let mut j = i;
            while j < norms.len() {
                let tok = norms[j];
                if let Some(&next) = self.nodes[node].children.get(tok) {
                    node = next;
                    consumed_any = true;
                    skipped = 0;
                    for &(type_idx, _, _) in &self.nodes[node].accepts {
                        found.push((i, j, type_idx));
                    }
                    j += 1;
                } else if consumed_any
                    && skipped < MAX_STOPWORD_SKIP
                    && self.stopwords.contains(tok)
                {
                    skipped += 1;
                    j += 1;
                } else {
                    break;
                }
            }
        }
        found.sort_unstable();
        found.dedup();
        found
    }

    /// Annotate a document: all maximal matches per sentence, conflicts
    /// resolved to a non-overlapping mention set.
    pub fn annotate(&self, tdoc: &TokenizedDocument, policy: ConflictPolicy) -> Vec<EntityMention> {
        let mut out = Vec::new();
        for sent in &tdoc.sentences {
            let norms: Vec<&str> = sent.iter().map(|t| t.norm.as_str()).collect();
            let candidates: Vec<EntityMention> = self
                .match_sentence(&norms)
                .into_iter()
                .map(|(a, b, type_idx)| {
                    let start = sent[a].start;
                    let end = sent[b].end;
                    EntityMention {
                        etype: self.types.name(type_idx).to_string(),
                        start,
                        end,
                        text: slice_chars(&tdoc.doc.text, start, end),
                    }
                })
                .collect();
            out.extend(resolve_conflicts(candidates, policy, &self.types));
        }
        sort_mentions(&mut out);
        out
    }
}

/// Reduce overlapping candidates to a pairwise non-overlapping set. Any
/// character overlap counts as a conflict.
pub fn resolve_conflicts(
    candidates: Vec<EntityMention>,
    policy: ConflictPolicy,
    types: &EntityTypeSet,
) -> Vec<EntityMention> {
    let mut ordered = candidates;
    match policy {
        ConflictPolicy::Deterministic => {
            ordered.sort_by(|a, b| {
                let la = a.end - a.start;
                let lb = b.end - b.start;
                lb.cmp(&la)
                    .then(a.start.cmp(&b.start))
                    .then(type_index(types, &a.etype).cmp(&type_index(types, &b.etype)))
                    .then(a.end.cmp(&b.end))
            });
        }
        ConflictPolicy::SeededRandom(seed) => {
            // Canonical order first so the shuffle is independent of the
            // caller's candidate order.
            ordered.sort_by(|a, b| {
                (a.start, a.end, type_index(types, &a.etype)).cmp(&(
                    b.start,
                    b.end,
                    type_index(types, &b.etype),
                ))
            });
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ordered.shuffle(&mut rng);
        }
    }
    let mut kept: Vec<EntityMention> = Vec::new();
    for cand in ordered {
        if kept.iter().all(|k| !k.overlaps(&cand)) {
            kept.push(cand);
        }
    }
    sort_mentions(&mut kept);
    kept
}

fn type_index(types: &EntityTypeSet, name: &str) -> usize {
    types.index_of(name).unwrap_or(usize::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{tokenize_document, AbbrevList, RawDocument};

    fn types3() -> EntityTypeSet {
        EntityTypeSet::new(["Drug", "Disease", "Proc"]).unwrap()
    }

    fn tdoc(text: &str) -> TokenizedDocument {
        tokenize_document(
            RawDocument::new("d", "t", text),
            &AbbrevList::default(),
            &NormPolicy::matching(),
        )
    }

    #[test]
    fn load_terms_two_token_entry() {
        let dict =
            TermDictionary::from_tsv("heparin sodium\tDrug\n", &types3(), &NormPolicy::matching())
                .unwrap();
        assert_eq!(dict.len(), 1);
        assert_eq!(dict.entries()[0].tokens, vec!["heparin", "sodium"]);
    }

    #[test]
    fn load_terms_collapses_duplicates() {
        let dict = TermDictionary::from_tsv(
            "aspirin\tDrug\naspirin\tDrug\n",
            &types3(),
            &NormPolicy::matching(),
        )
        .unwrap();
        assert_eq!(dict.len(), 1);
    }

    #[test]
    fn load_terms_normalizes() {
        let dict =
            TermDictionary::from_tsv("Paracétamol\tDrug\n", &types3(), &NormPolicy::matching())
                .unwrap();
        assert_eq!(dict.entries()[0].tokens, vec!["paracetamol"]);
    }

    #[test]
    fn load_terms_unknown_type_is_error() {
        let err = TermDictionary::from_tsv("aspirin\tNope\n", &types3(), &NormPolicy::matching())
            .unwrap_err();
        assert_eq!(
            err,
            GazetteerError::UnknownEntityType {
                line: 1,
                name: "Nope".into()
            }
        );
    }

    #[test]
    fn stopword_only_entries_are_dropped() {
        let dict = TermDictionary::from_tsv(
            "de la\tDrug\ncancer de poumon\tDisease\n",
            &types3(),
            &NormPolicy::matching(),
        )
        .unwrap()
        .with_stopwords(["de".to_string(), "la".to_string()]);
        assert_eq!(dict.len(), 1);
        assert_eq!(dict.entries()[0].etype, "Disease");
    }

    #[test]
    fn filter_common_removes_frequent_unigrams() {
        // Toy frequency list built by hand: "but" is common, "paracetamol"
        // is absent (count 0), and multi-token entries are never filtered.
        let dict = TermDictionary::from_tsv(
            "but\tDrug\nparacetamol\tDrug\nbut but\tDrug\n",
            &types3(),
            &NormPolicy::matching(),
        )
        .unwrap();
        let freq = FrequencyList::new(HashMap::from([("but".to_string(), 1_000_000u64)]));
        let kept = filter_common_terms(dict, &freq, 10_000);
        let tokens: Vec<&Vec<String>> = kept.entries().iter().map(|e| &e.tokens).collect();
        assert_eq!(tokens.len(), 2);
        assert!(tokens.contains(&&vec!["but".to_string(), "but".to_string()]));
        assert!(tokens.contains(&&vec!["paracetamol".to_string()]));
    }

    #[test]
    fn top_n_threshold_picks_nth_count() {
        let freq = FrequencyList::new(HashMap::from([
            ("a".to_string(), 100u64),
            ("b".to_string(), 50),
            ("c".to_string(), 10),
        ]));
        assert_eq!(freq.top_n_threshold(2), 50);
        assert_eq!(freq.top_n_threshold(10), u64::MAX);
    }

    #[test]
    fn matcher_finds_multi_token_entry() {
        let dict =
            TermDictionary::from_tsv("heparin sodium\tDrug\n", &types3(), &NormPolicy::matching())
                .unwrap();
        let m = build_matcher(&dict, &types3());
        let doc = tdoc("placed on heparin sodium");
        let mentions = m.annotate(&doc, ConflictPolicy::Deterministic);
        assert_eq!(
            mentions,
            vec![EntityMention::new("Drug", 10, 24, "heparin sodium")]
        );
    }

    #[test]
    fn matcher_is_case_insensitive() {
        let dict = TermDictionary::from_tsv("heparin\tDrug\n", &types3(), &NormPolicy::matching())
            .unwrap();
        let m = build_matcher(&dict, &types3());
        let doc = tdoc("started HEPARIN drip");
        let mentions = m.annotate(&doc, ConflictPolicy::Deterministic);
        assert_eq!(mentions.len(), 1);
        assert_eq!(mentions[0].text, "HEPARIN");
    }

    #[test]
    fn matcher_skips_stopwords() {
        // Stopword-skip rule by hand: entry [cancer, poumon], stopword "de";
        // the text tokens are [cancer, de, poumon].
        let dict = TermDictionary::from_tsv(
            "cancer poumon\tDisease\n",
            &types3(),
            &NormPolicy::matching(),
        )
        .unwrap()
        .with_stopwords(["de".to_string()]);
        let m = build_matcher(&dict, &types3());
        let doc = tdoc("cancer de poumon");
        let mentions = m.annotate(&doc, ConflictPolicy::Deterministic);
        assert_eq!(
            mentions,
            vec![EntityMention::new("Disease", 0, 16, "cancer de poumon")]
        );
    }

    #[test]
    fn matcher_stopword_skip_is_capped() {
        let dict = TermDictionary::from_tsv(
            "cancer poumon\tDisease\n",
            &types3(),
            &NormPolicy::matching(),
        )
        .unwrap()
        .with_stopwords(["de".to_string(), "la".to_string(), "du".to_string()]);
        let m = build_matcher(&dict, &types3());
        // Three consecutive stopwords exceed the cap of two.
        let doc = tdoc("cancer de la du poumon");
        assert!(m.annotate(&doc, ConflictPolicy::Deterministic).is_empty());
        let doc2 = tdoc("cancer de la poumon");
        assert_eq!(m.annotate(&doc2, ConflictPolicy::Deterministic).len(), 1);
    }

    #[test]
    fn entry_with_stopword_matches_text_without_it() {
        // Entry "cancer de poumon" keys to [cancer, poumon]; bare text matches.
        let dict = TermDictionary::from_tsv(
            "cancer de poumon\tDisease\n",
            &types3(),
            &NormPolicy::matching(),
        )
        .unwrap()
        .with_stopwords(["de".to_string()]);
        let m = build_matcher(&dict, &types3());
        let doc = tdoc("cancer poumon noted");
        assert_eq!(m.annotate(&doc, ConflictPolicy::Deterministic).len(), 1);
    }

    #[test]
    fn empty_dictionary_annotates_nothing() {
        let dict = TermDictionary::default();
        let m = build_matcher(&dict, &types3());
        let doc = tdoc("placed on heparin sodium");
        assert!(m.annotate(&doc, ConflictPolicy::Deterministic).is_empty());
    }

    #[test]
    fn longest_match_wins_over_nested() {
        // Candidate enumeration yields both "myocardial infarction" and
        // "infarction"; deterministic resolution keeps the longer one.
        let dict = TermDictionary::from_tsv(
            "myocardial infarction\tDisease\ninfarction\tDisease\n",
            &types3(),
            &NormPolicy::matching(),
        )
        .unwrap();
        let m = build_matcher(&dict, &types3());
        let doc = tdoc("acute myocardial infarction today");
        let mentions = m.annotate(&doc, ConflictPolicy::Deterministic);
        assert_eq!(mentions.len(), 1);
        assert_eq!(mentions[0].text, "myocardial infarction");
    }

    #[test]
    fn resolve_keeps_non_overlapping_unchanged() {
        let cands = vec![
            EntityMention::new("Drug", 0, 5, "alpha"),
            EntityMention::new("Drug", 6, 10, "beta"),
        ];
        assert_eq!(
            resolve_conflicts(cands.clone(), ConflictPolicy::Deterministic, &types3()),
            cands
        );
    }

    #[test]
    fn resolve_identical_spans_by_type_index() {
        let cands = vec![
            EntityMention::new("Proc", 0, 5, "scan!"),
            EntityMention::new("Drug", 0, 5, "scan!"),
        ];
        let kept = resolve_conflicts(cands, ConflictPolicy::Deterministic, &types3());
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].etype, "Drug");
    }

    #[test]
    fn seeded_random_is_reproducible() {
        let cands = vec![
            EntityMention::new("Proc", 0, 5, "alpha"),
            EntityMention::new("Drug", 3, 8, "phabet"),
            EntityMention::new("Disease", 6, 12, "etical"),
        ];
        let a = resolve_conflicts(cands.clone(), ConflictPolicy::SeededRandom(7), &types3());
        let b = resolve_conflicts(cands, ConflictPolicy::SeededRandom(7), &types3());
        assert_eq!(a, b);
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                assert!(!a[i].overlaps(&a[j]));
            }
        }
    }

    #[test]
    fn annotate_output_is_sound_and_non_overlapping() {
        let dict = TermDictionary::from_tsv(
            "heparin sodium\tDrug\nheparin\tDrug\nsodium level\tProc\n",
            &types3(),
            &NormPolicy::matching(),
        )
        .unwrap();
        let keys = dict.matching_keys();
        let m = build_matcher(&dict, &types3());
        let doc = tdoc("placed on heparin sodium level today heparin again");
        let mentions = m.annotate(&doc, ConflictPolicy::Deterministic);
        for i in 0..mentions.len() {
            for j in i + 1..mentions.len() {
                assert!(!mentions[i].overlaps(&mentions[j]));
            }
            // Soundness: matched token sequence (minus stopwords) is an entry.
            let toks: Vec<String> = tokenize(
                &mentions[i].text,
                (0, mentions[i].text.chars().count()),
                &NormPolicy::matching(),
            )
            .into_iter()
            .map(|t| t.norm)
            .filter(|t| !dict.stopwords().contains(t))
            .collect();
            assert!(keys.contains(&(toks, mentions[i].etype.clone())));
        }
    }

    #[test]
    fn policy_parses() {
        assert_eq!(
            ConflictPolicy::parse("det"),
            Some(ConflictPolicy::Deterministic)
        );
        assert_eq!(
            ConflictPolicy::parse("rand:42"),
            Some(ConflictPolicy::SeededRandom(42))
        );
        assert_eq!(ConflictPolicy::parse("bogus"), None);
    }
}

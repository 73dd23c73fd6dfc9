//! Deterministic sentence segmentation, tokenization and token normalization.
//!
//! All offsets are Unicode scalar positions (character counts, not bytes),
//! matching the convention of BRAT standoff files. The tokenizer is a fixed
//! rule set so that every downstream fixture is bit-exact: tokens split on
//! whitespace and on letter/digit/punctuation class transitions, and every
//! punctuation character becomes its own single-character token.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Reserved normalized form for numeric tokens.
pub const NUM_TOKEN: &str = "<num>";

/// A raw input document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    /// Document type label (e.g. "discharge_summary", "letter"); used for
    /// stratified fold splitting.
    pub doc_type: String,
    pub text: String,
}

impl RawDocument {
    pub fn new(
        id: impl Into<String>,
        doc_type: impl Into<String>,
        text: impl Into<String>,
    ) -> Self {
        RawDocument {
            id: id.into(),
            doc_type: doc_type.into(),
            text: text.into(),
        }
    }
}

/// A single token with half-open character offsets into the document text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    /// Normalized form, never empty.
    pub norm: String,
}

/// A document with sentence and token segmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedDocument {
    pub doc: RawDocument,
    pub sentences: Vec<Vec<Token>>,
}

impl TokenizedDocument {
    /// Character span of sentence `i` (first token start to last token end).
    pub fn sentence_span(&self, i: usize) -> (usize, usize) {
        let s = &self.sentences[i];
        (s[0].start, s[s.len() - 1].end)
    }

    /// Raw text of sentence `i`.
    pub fn sentence_text(&self, i: usize) -> String {
        let (a, b) = self.sentence_span(i);
        slice_chars(&self.doc.text, a, b)
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

/// Token normalization policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormPolicy {
    pub lowercase: bool,
    pub strip_diacritics: bool,
    /// Map purely numeric tokens to the reserved `<num>` token.
    pub map_numbers: bool,
}

impl NormPolicy {
    /// Policy for model input: case folding, diacritic stripping, `<num>`.
    pub fn model_input() -> Self {
        NormPolicy {
            lowercase: true,
            strip_diacritics: true,
            map_numbers: true,
        }
    }

    /// Policy for dictionary matching: numbers are kept as-is so dictionary
    /// entries never contain placeholders.
    pub fn matching() -> Self {
        NormPolicy {
            lowercase: true,
            strip_diacritics: true,
            map_numbers: false,
        }
    }
}

impl Default for NormPolicy {
    fn default() -> Self {
        NormPolicy::model_input()
    }
}

/// Sentence-final abbreviations that suppress a split after a period.
#[derive(Debug, Clone)]
pub struct AbbrevList {
    set: HashSet<String>,
}

impl AbbrevList {
    pub fn new<I: IntoIterator<Item = String>>(items: I) -> Self {
        AbbrevList {
            set: items.into_iter().collect(),
        }
    }

    /// One abbreviation per line, UTF-8; blank lines ignored.
    pub fn from_text(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.set.contains(word)
    }
}

impl Default for AbbrevList {
    fn default() -> Self {
        Self::new(
            ["Dr", "Pr", "M", "Mme", "Mlle", "mg", "ml", "cf", "vs"]
                .into_iter()
                .map(String::from),
        )
    }
}

/// Slice a string by character (not byte) offsets.
pub fn slice_chars(text: &str, start: usize, end: usize) -> String {
    text.chars()
        .skip(start)
        .take(end.saturating_sub(start))
        .collect()
}

/// A token consisting of digits with optional `.`/`,` separators.
pub fn is_numeric_token(s: &str) -> bool {
    let mut saw_digit = false;
    for c in s.chars() {
        if c.is_ascii_digit() {
            saw_digit = true;
        } else if c != '.' && c != ',' {
            return false;
        }
    }
    saw_digit
}

fn fold_char(c: char, out: &mut String) {
    match c {
        'à' | 'á' | 'â' | 'ä' | 'ã' | 'å' => out.push('a'),
        'è' | 'é' | 'ê' | 'ë' => out.push('e'),
        'ì' | 'í' | 'î' | 'ï' => out.push('i'),
        'ò' | 'ó' | 'ô' | 'ö' | 'õ' => out.push('o'),
        'ù' | 'ú' | 'û' | 'ü' => out.push('u'),
        'ç' => out.push('c'),
        'ñ' => out.push('n'),
        'ý' | 'ÿ' => out.push('y'),
        'œ' => out.push_str("oe"),
        'æ' => out.push_str("ae"),
        'À' | 'Á' | 'Â' | 'Ä' | 'Ã' | 'Å' => out.push('A'),
        'È' | 'É' | 'Ê' | 'Ë' => out.push('E'),
        'Ì' | 'Í' | 'Î' | 'Ï' => out.push('I'),
        'Ò' | 'Ó' | 'Ô' | 'Ö' | 'Õ' => out.push('O'),
        'Ù' | 'Ú' | 'Û' | 'Ü' => out.push('U'),
        'Ç' => out.push('C'),
        'Ñ' => out.push('N'),
        'Ý' => out.push('Y'),
        'Œ' => out.push_str("OE"),
        'Æ' => out.push_str("AE"),
        _ => out.push(c),
    }
}

/// Replace accented Latin characters by their base letters.
pub fn strip_diacritics(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        fold_char(c, &mut out);
    }
    out
}

/// Normalize one token surface according to `policy`. Idempotent.
pub fn normalize_token(surface: &str, policy: &NormPolicy) -> String {
    debug_assert!(!surface.is_empty());
    if policy.map_numbers && is_numeric_token(surface) {
        return NUM_TOKEN.to_string();
    }
    let mut s = surface.to_string();
    if policy.lowercase {
        s = s.to_lowercase();
    }
    if policy.strip_diacritics {
        s = strip_diacritics(&s);
    }
    s
}

/// Fold a whole string for exact-match lookups (heading lexicon keys):
/// lowercase, diacritics stripped, whitespace runs collapsed to one space.
pub fn fold_string(s: &str) -> String {
    let folded = strip_diacritics(&s.to_lowercase());
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Split `text` into sentence spans (character offsets, half-open).
///
/// Splits occur at sentence-final punctuation (`.` `!` `?`) followed by
/// whitespace and an uppercase letter or digit, and at blank lines. A period
/// preceded by a word in `abbrevs` does not split. Spans are trimmed to the
/// first/last non-whitespace character, so together they cover exactly the
/// non-whitespace content of `text`.
pub fn segment_sentences(text: &str, abbrevs: &AbbrevList) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    if n == 0 {
        return Vec::new();
    }

    // Candidate cut positions: indices where a new sentence may start.
    let mut cuts: Vec<usize> = vec![0];
    let mut i = 0;
    while i < n {
        let c = chars[i];
        if c == '.' || c == '!' || c == '?' {
            // Look ahead: whitespace then uppercase/digit.
            let mut j = i + 1;
            while j < n && chars[j].is_whitespace() {
                j += 1;
            }
            let ws_after = j > i + 1;
            if ws_after && j < n && (chars[j].is_uppercase() || chars[j].is_numeric()) {
                let suppressed =
                    c == '.' && preceding_word(&chars, i).is_some_and(|w| abbrevs.contains(&w));
                if !suppressed {
                    cuts.push(j);
                }
            }
            i += 1;
        } else if c == '\n' {
            // Blank line: newline, optional spaces/tabs, newline.
            let mut j = i + 1;
            while j < n && (chars[j] == ' ' || chars[j] == '\t' || chars[j] == '\r') {
                j += 1;
            }
            if j < n && chars[j] == '\n' {
                // Skip any further whitespace to the start of the next block.
                let mut k = j + 1;
                while k < n && chars[k].is_whitespace() {
                    k += 1;
                }
                if k < n {
                    cuts.push(k);
                }
                i = j + 1;
            } else {
                i += 1;
            }
        } else {
            i += 1;
        }
    }
    cuts.sort_unstable();
    cuts.dedup();
    cuts.push(n);

    let mut spans = Vec::new();
    for w in cuts.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        while a < b && chars[a].is_whitespace() {
            a += 1;
        }
        while b > a && chars[b - 1].is_whitespace() {
            b -= 1;
        }
        if a < b {
            spans.push((a, b));
        }
    }
    spans
}

fn preceding_word(chars: &[char], period: usize) -> Option<String> {
    let mut j = period;
    while j > 0 && chars[j - 1].is_alphabetic() {
        j -= 1;
    }
    if j == period {
        None
    } else {
        Some(chars[j..period].iter().collect())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Letter,
    Digit,
    Other,
}

fn class_of(c: char) -> CharClass {
    if c.is_alphabetic() {
        CharClass::Letter
    } else if c.is_numeric() {
        CharClass::Digit
    } else {
        CharClass::Other
    }
}

/// Tokenize one sentence span. Letters and digits cluster into runs; every
/// other non-whitespace character is a single-character token.
pub fn tokenize(text: &str, span: (usize, usize), policy: &NormPolicy) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let (start, end) = span;
    let mut tokens = Vec::new();
    let mut i = start;
    while i < end {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let cls = class_of(c);
        let tok_start = i;
        i += 1;
        if cls != CharClass::Other {
            while i < end && !chars[i].is_whitespace() && class_of(chars[i]) == cls {
                i += 1;
            }
        }
        let surface: String = chars[tok_start..i].iter().collect();
        let norm = normalize_token(&surface, policy);
        tokens.push(Token {
            surface,
            start: tok_start,
            end: i,
            norm,
        });
    }
    tokens
}

/// Segment and tokenize a whole document.
pub fn tokenize_document(
    doc: RawDocument,
    abbrevs: &AbbrevList,
    policy: &NormPolicy,
) -> TokenizedDocument {
    let sentences = segment_sentences(&doc.text, abbrevs)
        .into_iter()
        .map(|span| tokenize(&doc.text, span, policy))
        .filter(|toks| !toks.is_empty())
        .collect();
    TokenizedDocument { doc, sentences }
}

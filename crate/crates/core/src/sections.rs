//! Section-heading detection from a heading lexicon and propagation of the
//! last-heading class to every token.

use crate::text::{fold_string, TokenizedDocument};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Class id reserved for tokens before any heading.
pub const NONE_SECTION: usize = 0;

#[derive(Debug, Error, PartialEq)]
pub enum SectionError {
    #[error("line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("unknown section class `{0}`")]
    UnknownClass(String),
}

/// Ordered section classes. Index 0 is always the reserved NONE class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionClasses {
    names: Vec<String>,
}

impl SectionClasses {
    /// Build from user classes; NONE is prepended automatically.
    pub fn new<I, S>(user_classes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names = vec!["NONE".to_string()];
        for c in user_classes {
            let c = c.into();
            if !names.contains(&c) {
                names.push(c);
            }
        }
        SectionClasses { names }
    }

    pub fn default_clinical() -> Self {
        Self::new([
            "HISTORY",
            "MEDICATIONS",
            "EXAM",
            "LABS",
            "IMAGING",
            "PLAN",
            "OTHER",
        ])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false // NONE is always present
    }
}

impl Default for SectionClasses {
    fn default() -> Self {
        Self::default_clinical()
    }
}

/// Map from normalized heading string to section class id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadingLexicon {
    map: BTreeMap<String, usize>,
    classes: SectionClasses,
}

impl HeadingLexicon {
    pub fn new(classes: SectionClasses) -> Self {
        HeadingLexicon {
            map: BTreeMap::new(),
            classes,
        }
    }

    /// TSV with `heading TAB class` per line.
    pub fn from_tsv(tsv: &str, classes: SectionClasses) -> Result<Self, SectionError> {
        let mut lex = HeadingLexicon::new(classes);
        for (lineno, line) in tsv.lines().enumerate() {
            let lineno = lineno + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (heading, class) =
                line.split_once('\t')
                    .ok_or_else(|| SectionError::ParseError {
                        line: lineno,
                        msg: "expected `heading TAB class`".into(),
                    })?;
            lex.insert(heading, class.trim())?;
        }
        Ok(lex)
    }

    pub fn insert(&mut self, heading: &str, class: &str) -> Result<(), SectionError> {
        let id = self
            .classes
            .index_of(class)
            .ok_or_else(|| SectionError::UnknownClass(class.to_string()))?;
        self.map.insert(normalize_heading(heading), id);
        Ok(())
    }

    pub fn classes(&self) -> &SectionClasses {
        &self.classes
    }

    pub fn lookup(&self, heading: &str) -> Option<usize> {
        self.map.get(&normalize_heading(heading)).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Fold a heading for exact-match comparison: trailing colons stripped,
/// case and diacritics folded, whitespace collapsed.
fn normalize_heading(s: &str) -> String {
    fold_string(s.trim_end().trim_end_matches(':'))
}

/// Sentences whose normalized text equals a lexicon key, in document order.
pub fn detect_headings(tdoc: &TokenizedDocument, lex: &HeadingLexicon) -> Vec<(usize, usize)> {
    (0..tdoc.sentences.len())
        .filter_map(|i| lex.lookup(&tdoc.sentence_text(i)).map(|class| (i, class)))
        .collect()
}

/// Per-sentence, per-token section class: the class of the nearest preceding
/// heading (heading sentences get their own class); NONE before the first
/// heading.
pub fn assign_section_feature(
    tdoc: &TokenizedDocument,
    headings: &[(usize, usize)],
) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(tdoc.sentences.len());
    let mut current = NONE_SECTION;
    let mut next_heading = headings.iter().peekable();
    for (i, sent) in tdoc.sentences.iter().enumerate() {
        if let Some(&&(hi, class)) = next_heading.peek() {
            if hi == i {
                current = class;
                next_heading.next();
            }
        }
        out.push(vec![current; sent.len()]);
    }
    out
}

//! Word, character and feature vocabularies with reserved ids.

use crate::text::{is_numeric_token, TokenizedDocument, NUM_TOKEN};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

/// Word and character id tables. Word ids 0..=2 are reserved for
/// `<pad>`, `<unk>` and `<num>`; char ids 0..=1 for `<pad>` and `<unk>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocab {
    words: Vec<String>,
    chars: Vec<char>,
    #[serde(skip)]
    word_index: HashMap<String, usize>,
    #[serde(skip)]
    char_index: HashMap<char, usize>,
}

impl Vocab {
    pub const PAD: usize = 0;
    pub const UNK: usize = 1;
    pub const NUM: usize = 2;
    pub const CHAR_PAD: usize = 0;
    pub const CHAR_UNK: usize = 1;
    const RESERVED_WORDS: usize = 3;
    const RESERVED_CHARS: usize = 2;

    /// Collect sorted unique normalized word forms and surface characters
    /// from the documents. Numeric norms are folded into the reserved
    /// `<num>` id rather than stored.
    pub fn build(docs: &[&TokenizedDocument]) -> Vocab {
        let mut words = BTreeSet::new();
        let mut chars = BTreeSet::new();
        for doc in docs {
            for tok in doc.sentences.iter().flatten() {
                if !is_numeric_token(&tok.norm) && tok.norm != NUM_TOKEN {
                    words.insert(tok.norm.clone());
                }
                for c in tok.surface.chars() {
                    chars.insert(c);
                }
            }
        }
        let mut vocab = Vocab {
            words: words.into_iter().collect(),
            chars: chars.into_iter().collect(),
            word_index: HashMap::new(),
            char_index: HashMap::new(),
        };
        vocab.rebuild_indexes();
        vocab
    }

    /// Rebuild the lookup maps (needed after deserialization).
    pub fn rebuild_indexes(&mut self) {
        self.word_index = self
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i + Self::RESERVED_WORDS))
            .collect();
        self.char_index = self
            .chars
            .iter()
            .enumerate()
            .map(|(i, c)| (*c, i + Self::RESERVED_CHARS))
            .collect();
    }

    pub fn word_id(&self, norm: &str) -> usize {
        if norm == NUM_TOKEN || is_numeric_token(norm) {
            return Self::NUM;
        }
        self.word_index.get(norm).copied().unwrap_or(Self::UNK)
    }

    pub fn char_id(&self, c: char) -> usize {
        self.char_index.get(&c).copied().unwrap_or(Self::CHAR_UNK)
    }

    /// Total word rows including reserved ids.
    pub fn word_count(&self) -> usize {
        self.words.len() + Self::RESERVED_WORDS
    }

    pub fn char_count(&self) -> usize {
        self.chars.len() + Self::RESERVED_CHARS
    }

    /// Iterate (word, id) pairs for non-reserved words.
    pub fn words_with_ids(&self) -> impl Iterator<Item = (&str, usize)> {
        self.words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), i + Self::RESERVED_WORDS))
    }
}

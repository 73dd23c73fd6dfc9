//! Entity mentions, the IOB tagging scheme, repair of malformed tag
//! sequences, and readers/writers for BRAT standoff and CoNLL columns.

use crate::text::{slice_chars, NormPolicy, RawDocument, Token, TokenizedDocument};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnnotationError {
    #[error("entity type set must be non-empty with unique names")]
    InvalidTypeSet,
    #[error("unknown entity type `{0}`")]
    UnknownEntityType(String),
    #[error("mention [{start},{end}) does not align with token boundaries")]
    MisalignedMention { start: usize, end: usize },
    #[error("mentions [{a_start},{a_end}) and [{b_start},{b_end}) overlap")]
    OverlappingMentions {
        a_start: usize,
        a_end: usize,
        b_start: usize,
        b_end: usize,
    },
    #[error("line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("line {line}: annotation text `{expected}` does not match document slice `{found}`")]
    TextMismatch {
        line: usize,
        expected: String,
        found: String,
    },
}

/// The configured, ordered set of entity type names. The ordering is fixed
/// per run and used for label indexing and conflict tie-breaking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityTypeSet {
    names: Vec<String>,
}

impl EntityTypeSet {
    pub fn new<I, S>(names: I) -> Result<Self, AnnotationError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut seen = std::collections::HashSet::new();
        if names.is_empty() || !names.iter().all(|n| seen.insert(n.clone())) {
            return Err(AnnotationError::InvalidTypeSet);
        }
        Ok(EntityTypeSet { names })
    }

    /// The five clinical entity types used throughout the multi-class
    /// experiments.
    pub fn default_clinical() -> Self {
        Self::new([
            "DrugName",
            "SignSymptom",
            "DiseaseDisorder",
            "DiagProcLabTest",
            "TherapeuticProc",
        ])
        .expect("static set is valid")
    }

    /// Single-type set for drug-name-only experiments.
    pub fn drug_only() -> Self {
        Self::new(["DrugName"]).expect("static set is valid")
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Size of the IOB label alphabet: 2k+1 for k entity types.
    pub fn num_labels(&self) -> usize {
        2 * self.names.len() + 1
    }
}

/// One IOB tag. Type indices refer to an [`EntityTypeSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    Outside,
    Begin(usize),
    Inside(usize),
}

impl Tag {
    /// Dense label index: O = 0, B-t = 1+2t, I-t = 2+2t.
    pub fn label_index(self) -> usize {
        match self {
            Tag::Outside => 0,
            Tag::Begin(t) => 1 + 2 * t,
            Tag::Inside(t) => 2 + 2 * t,
        }
    }

    pub fn from_label_index(idx: usize) -> Tag {
        if idx == 0 {
            Tag::Outside
        } else if idx % 2 == 1 {
            Tag::Begin((idx - 1) / 2)
        } else {
            Tag::Inside(idx / 2 - 1)
        }
    }

    pub fn display(self, types: &EntityTypeSet) -> String {
        match self {
            Tag::Outside => "O".to_string(),
            Tag::Begin(t) => format!("B-{}", types.name(t)),
            Tag::Inside(t) => format!("I-{}", types.name(t)),
        }
    }

    pub fn parse(s: &str, types: &EntityTypeSet) -> Result<Tag, AnnotationError> {
        if s == "O" {
            return Ok(Tag::Outside);
        }
        let (prefix, name) = s
            .split_once('-')
            .ok_or_else(|| AnnotationError::UnknownEntityType(s.to_string()))?;
        let idx = types
            .index_of(name)
            .ok_or_else(|| AnnotationError::UnknownEntityType(name.to_string()))?;
        match prefix {
            "B" => Ok(Tag::Begin(idx)),
            "I" => Ok(Tag::Inside(idx)),
            _ => Err(AnnotationError::UnknownEntityType(s.to_string())),
        }
    }
}

/// Whether `from → to` is a structurally valid IOB transition.
pub fn valid_iob_transition(from: Tag, to: Tag) -> bool {
    match to {
        Tag::Inside(t) => matches!(from, Tag::Begin(u) | Tag::Inside(u) if u == t),
        _ => true,
    }
}

/// Whether a sequence may start with `tag`.
pub fn valid_iob_start(tag: Tag) -> bool {
    !matches!(tag, Tag::Inside(_))
}

/// A typed character span.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityMention {
    pub etype: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

impl EntityMention {
    pub fn new(
        etype: impl Into<String>,
        start: usize,
        end: usize,
        text: impl Into<String>,
    ) -> Self {
        EntityMention {
            etype: etype.into(),
            start,
            end,
            text: text.into(),
        }
    }

    pub fn overlaps(&self, other: &EntityMention) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for EntityMention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{},{}) `{}`",
            self.etype, self.start, self.end, self.text
        )
    }
}

/// Sort mentions by (start, end, type name) for stable output.
pub fn sort_mentions(mentions: &mut [EntityMention]) {
    mentions.sort_by(|a, b| (a.start, a.end, &a.etype).cmp(&(b.start, b.end, &b.etype)));
}

fn check_non_overlapping(mentions: &[EntityMention]) -> Result<(), AnnotationError> {
    let mut sorted: Vec<&EntityMention> = mentions.iter().collect();
    sorted.sort_by_key(|m| (m.start, m.end));
    for w in sorted.windows(2) {
        if w[0].overlaps(w[1]) {
            return Err(AnnotationError::OverlappingMentions {
                a_start: w[0].start,
                a_end: w[0].end,
                b_start: w[1].start,
                b_end: w[1].end,
            });
        }
    }
    Ok(())
}

/// Encode mentions over one sentence's tokens as an IOB tag sequence.
///
/// Every mention must start and end exactly on token boundaries; a mention
/// cutting through a token is reported as [`AnnotationError::MisalignedMention`].
pub fn encode_iob(
    tokens: &[Token],
    mentions: &[EntityMention],
    types: &EntityTypeSet,
) -> Result<Vec<Tag>, AnnotationError> {
    check_non_overlapping(mentions)?;
    let start_of: HashMap<usize, usize> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.start, i))
        .collect();
    let end_of: HashMap<usize, usize> =
        tokens.iter().enumerate().map(|(i, t)| (t.end, i)).collect();

    let mut tags = vec![Tag::Outside; tokens.len()];
    for m in mentions {
        let t = types
            .index_of(&m.etype)
            .ok_or_else(|| AnnotationError::UnknownEntityType(m.etype.clone()))?;
        let (first, last) = match (start_of.get(&m.start), end_of.get(&m.end)) {
            (Some(&a), Some(&b)) if a <= b => (a, b),
            _ => {
                return Err(AnnotationError::MisalignedMention {
                    start: m.start,
                    end: m.end,
                })
            }
        };
        tags[first] = Tag::Begin(t);
        for tag in tags.iter_mut().take(last + 1).skip(first + 1) {
            *tag = Tag::Inside(t);
        }
    }
    Ok(tags)
}

/// Rewrite every `I-t` that is not preceded by `B-t` or `I-t` of the same
/// type into `B-t`. Valid sequences are returned unchanged; the output is
/// always IOB-valid and the operation is idempotent.
pub fn repair_tags(tags: &[Tag]) -> Vec<Tag> {
    let mut out = Vec::with_capacity(tags.len());
    let mut prev = Tag::Outside;
    for &tag in tags {
        let fixed = match tag {
            Tag::Inside(t) if !valid_iob_transition(prev, tag) => Tag::Begin(t),
            other => other,
        };
        out.push(fixed);
        prev = fixed;
    }
    out
}

/// Decode an IOB tag sequence back into mentions. Malformed sequences are
/// repaired first, so decoding never fails.
pub fn decode_iob(
    doc_text: &str,
    tokens: &[Token],
    tags: &[Tag],
    types: &EntityTypeSet,
) -> Vec<EntityMention> {
    debug_assert_eq!(tokens.len(), tags.len());
    let tags = repair_tags(tags);
    let mut mentions = Vec::new();
    let mut open: Option<(usize, usize, usize)> = None; // (type, first_tok, last_tok)
    for (i, &tag) in tags.iter().enumerate() {
        match tag {
            Tag::Begin(t) => {
                if let Some((ty, a, b)) = open.take() {
                    mentions.push(mention_from_tokens(doc_text, tokens, ty, a, b, types));
                }
                open = Some((t, i, i));
            }
            Tag::Inside(t) => {
                // After repair an Inside always continues the open run.
                debug_assert!(matches!(open, Some((ty, _, _)) if ty == t));
                if let Some((_, _, ref mut b)) = open {
                    *b = i;
                }
            }
            Tag::Outside => {
                if let Some((ty, a, b)) = open.take() {
                    mentions.push(mention_from_tokens(doc_text, tokens, ty, a, b, types));
                }
            }
        }
    }
    if let Some((ty, a, b)) = open {
        mentions.push(mention_from_tokens(doc_text, tokens, ty, a, b, types));
    }
    mentions
}

fn mention_from_tokens(
    doc_text: &str,
    tokens: &[Token],
    etype_idx: usize,
    first: usize,
    last: usize,
    types: &EntityTypeSet,
) -> EntityMention {
    let start = tokens[first].start;
    let end = tokens[last].end;
    EntityMention {
        etype: types.name(etype_idx).to_string(),
        start,
        end,
        text: slice_chars(doc_text, start, end),
    }
}

/// Encode document-level mentions sentence by sentence. A mention crossing a
/// sentence boundary is misaligned by definition.
pub fn encode_document(
    tdoc: &TokenizedDocument,
    mentions: &[EntityMention],
    types: &EntityTypeSet,
) -> Result<Vec<Vec<Tag>>, AnnotationError> {
    check_non_overlapping(mentions)?;
    let mut per_sentence: Vec<Vec<EntityMention>> = vec![Vec::new(); tdoc.sentences.len()];
    'outer: for m in mentions {
        for (i, _) in tdoc.sentences.iter().enumerate() {
            let (a, b) = tdoc.sentence_span(i);
            if m.start >= a && m.end <= b {
                per_sentence[i].push(m.clone());
                continue 'outer;
            }
        }
        return Err(AnnotationError::MisalignedMention {
            start: m.start,
            end: m.end,
        });
    }
    tdoc.sentences
        .iter()
        .zip(&per_sentence)
        .map(|(toks, ms)| encode_iob(toks, ms, types))
        .collect()
}

/// Decode per-sentence tags for a whole document.
pub fn decode_document(
    tdoc: &TokenizedDocument,
    tags: &[Vec<Tag>],
    types: &EntityTypeSet,
) -> Vec<EntityMention> {
    let mut out = Vec::new();
    for (toks, sent_tags) in tdoc.sentences.iter().zip(tags) {
        out.extend(decode_iob(&tdoc.doc.text, toks, sent_tags, types));
    }
    out
}

/// Result of reading a BRAT `.ann` file: textbound mentions plus the
/// non-textbound lines that were ignored.
#[derive(Debug, Clone)]
pub struct BratFile {
    pub mentions: Vec<EntityMention>,
    /// (line number, line content) of ignored non-T lines.
    pub ignored: Vec<(usize, String)>,
}

/// Parse BRAT textbound lines (`T<id>\t<Type> <start> <end>\t<text>`).
///
/// Offsets are character offsets into `doc.text`; the quoted text must match
/// the document slice (BRAT replaces newlines with spaces, which is honored
/// here). Non-T lines are ignored and reported in [`BratFile::ignored`].
pub fn read_brat(
    ann_text: &str,
    doc: &RawDocument,
    types: &EntityTypeSet,
) -> Result<BratFile, AnnotationError> {
    let text_len = doc.text.chars().count();
    let mut mentions = Vec::new();
    let mut ignored = Vec::new();
    for (lineno, line) in ann_text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        if !line.starts_with('T') {
            ignored.push((lineno, line.to_string()));
            continue;
        }
        let mut cols = line.split('\t');
        let _id = cols.next();
        let mid = cols.next().ok_or_else(|| AnnotationError::ParseError {
            line: lineno,
            msg: "missing type/offset column".into(),
        })?;
        let quoted = cols.next().ok_or_else(|| AnnotationError::ParseError {
            line: lineno,
            msg: "missing text column".into(),
        })?;
        let parts: Vec<&str> = mid.split(' ').collect();
        if parts.len() != 3 {
            return Err(AnnotationError::ParseError {
                line: lineno,
                msg: format!(
                    "expected `Type start end`, got `{mid}` (discontinuous spans unsupported)"
                ),
            });
        }
        let etype = parts[0];
        if types.index_of(etype).is_none() {
            return Err(AnnotationError::ParseError {
                line: lineno,
                msg: format!("unknown entity type `{etype}`"),
            });
        }
        let start: usize = parts[1].parse().map_err(|_| AnnotationError::ParseError {
            line: lineno,
            msg: format!("bad start offset `{}`", parts[1]),
        })?;
        let end: usize = parts[2].parse().map_err(|_| AnnotationError::ParseError {
            line: lineno,
            msg: format!("bad end offset `{}`", parts[2]),
        })?;
        if start >= end || end > text_len {
            return Err(AnnotationError::ParseError {
                line: lineno,
                msg: format!("invalid span [{start},{end}) for document of length {text_len}"),
            });
        }
        let slice = slice_chars(&doc.text, start, end).replace('\n', " ");
        if slice != quoted {
            return Err(AnnotationError::TextMismatch {
                line: lineno,
                expected: quoted.to_string(),
                found: slice,
            });
        }
        mentions.push(EntityMention::new(
            etype,
            start,
            end,
            slice_chars(&doc.text, start, end),
        ));
    }
    check_non_overlapping(&mentions)?;
    Ok(BratFile { mentions, ignored })
}

/// Serialize mentions as BRAT textbound lines, sorted by span.
pub fn write_brat(mentions: &[EntityMention]) -> String {
    let mut sorted = mentions.to_vec();
    sort_mentions(&mut sorted);
    let mut out = String::new();
    for (i, m) in sorted.iter().enumerate() {
        out.push_str(&format!(
            "T{}\t{} {} {}\t{}\n",
            i + 1,
            m.etype,
            m.start,
            m.end,
            m.text.replace('\n', " ")
        ));
    }
    out
}

/// One CoNLL sentence: tokens with aligned tags.
pub type ConllSentence = (Vec<Token>, Vec<Tag>);

/// Parse 4-column CoNLL text (`surface TAB start TAB end TAB tag`, blank
/// line between sentences).
pub fn read_conll(
    text: &str,
    types: &EntityTypeSet,
    policy: &NormPolicy,
) -> Result<Vec<ConllSentence>, AnnotationError> {
    let mut sentences = Vec::new();
    let mut toks = Vec::new();
    let mut tags = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.is_empty() {
            if !toks.is_empty() {
                sentences.push((std::mem::take(&mut toks), std::mem::take(&mut tags)));
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(AnnotationError::ParseError {
                line: lineno,
                msg: format!("expected 4 tab-separated columns, got {}", cols.len()),
            });
        }
        let start: usize = cols[1].parse().map_err(|_| AnnotationError::ParseError {
            line: lineno,
            msg: format!("bad start offset `{}`", cols[1]),
        })?;
        let end: usize = cols[2].parse().map_err(|_| AnnotationError::ParseError {
            line: lineno,
            msg: format!("bad end offset `{}`", cols[2]),
        })?;
        if start >= end {
            return Err(AnnotationError::ParseError {
                line: lineno,
                msg: format!("invalid token span [{start},{end})"),
            });
        }
        let tag = Tag::parse(cols[3], types).map_err(|e| AnnotationError::ParseError {
            line: lineno,
            msg: e.to_string(),
        })?;
        toks.push(Token {
            surface: cols[0].to_string(),
            start,
            end,
            norm: crate::text::normalize_token(cols[0], policy),
        });
        tags.push(tag);
    }
    if !toks.is_empty() {
        sentences.push((toks, tags));
    }
    Ok(sentences)
}

/// Serialize per-sentence tokens and tags as 4-column CoNLL text.
pub fn write_conll(sentences: &[ConllSentence], types: &EntityTypeSet) -> String {
    let mut out = String::new();
    for (toks, tags) in sentences {
        for (tok, tag) in toks.iter().zip(tags) {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                tok.surface,
                tok.start,
                tok.end,
                tag.display(types)
            ));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{tokenize, tokenize_document, AbbrevList};
    use proptest::prelude::*;

    fn toks(text: &str) -> Vec<Token> {
        tokenize(text, (0, text.chars().count()), &NormPolicy::matching())
    }

    fn drug_types() -> EntityTypeSet {
        EntityTypeSet::new(["DRUG"]).unwrap()
    }

    #[test]
    fn label_alphabet_size_is_2k_plus_1() {
        let five = EntityTypeSet::default_clinical();
        assert_eq!(five.num_labels(), 11);
        assert_eq!(drug_types().num_labels(), 3);
    }

    #[test]
    fn label_index_round_trip() {
        for idx in 0..11 {
            assert_eq!(Tag::from_label_index(idx).label_index(), idx);
        }
    }

    #[test]
    fn encode_paper_example() {
        // "placed on heparin sodium" with a DRUG mention over "heparin sodium"
        // encodes to O O B-DRUG I-DRUG.
        let text = "placed on heparin sodium";
        let tokens = toks(text);
        let types = drug_types();
        let mention = EntityMention::new("DRUG", 10, 24, "heparin sodium");
        let tags = encode_iob(&tokens, &[mention], &types).unwrap();
        let shown: Vec<String> = tags.iter().map(|t| t.display(&types)).collect();
        assert_eq!(shown, vec!["O", "O", "B-DRUG", "I-DRUG"]);
    }

    #[test]
    fn encode_no_mentions_is_all_outside() {
        let tokens = toks("nothing to see");
        let tags = encode_iob(&tokens, &[], &drug_types()).unwrap();
        assert!(tags.iter().all(|&t| t == Tag::Outside));
    }

    #[test]
    fn adjacent_single_token_mentions_both_begin() {
        let text = "aspirin heparin";
        let tokens = toks(text);
        let types = drug_types();
        let ms = vec![
            EntityMention::new("DRUG", 0, 7, "aspirin"),
            EntityMention::new("DRUG", 8, 15, "heparin"),
        ];
        let tags = encode_iob(&tokens, &ms, &types).unwrap();
        assert_eq!(tags, vec![Tag::Begin(0), Tag::Begin(0)]);
    }

    #[test]
    fn misaligned_mention_is_reported_with_offsets() {
        let tokens = toks("heparin sodium");
        let err = encode_iob(
            &tokens,
            &[EntityMention::new("DRUG", 2, 7, "parin")],
            &drug_types(),
        )
        .unwrap_err();
        assert_eq!(err, AnnotationError::MisalignedMention { start: 2, end: 7 });
    }

    #[test]
    fn decode_paper_example() {
        let text = "placed on heparin sodium";
        let tokens = toks(text);
        let types = drug_types();
        let tags = vec![Tag::Outside, Tag::Outside, Tag::Begin(0), Tag::Inside(0)];
        let ms = decode_iob(text, &tokens, &tags, &types);
        assert_eq!(
            ms,
            vec![EntityMention::new("DRUG", 10, 24, "heparin sodium")]
        );
    }

    #[test]
    fn decode_all_outside_is_empty() {
        let text = "no entities here";
        let tokens = toks(text);
        let tags = vec![Tag::Outside; tokens.len()];
        assert!(decode_iob(text, &tokens, &tags, &drug_types()).is_empty());
    }

    #[test]
    fn decode_type_switch_splits_mentions() {
        // [B-t, I-u] repairs to [B-t, B-u] and decodes to two mentions.
        let text = "aspirin fever";
        let tokens = toks(text);
        let types = EntityTypeSet::new(["DRUG", "SIGN"]).unwrap();
        let tags = vec![Tag::Begin(0), Tag::Inside(1)];
        let ms = decode_iob(text, &tokens, &tags, &types);
        assert_eq!(ms.len(), 2);
        assert_eq!(ms[0].etype, "DRUG");
        assert_eq!(ms[1].etype, "SIGN");
    }

    #[test]
    fn repair_stray_inside_becomes_begin() {
        assert_eq!(
            repair_tags(&[Tag::Outside, Tag::Inside(0)]),
            vec![Tag::Outside, Tag::Begin(0)]
        );
    }

    #[test]
    fn repair_keeps_valid_sequences() {
        let valid = vec![Tag::Begin(0), Tag::Inside(0)];
        assert_eq!(repair_tags(&valid), valid);
    }

    #[test]
    fn repair_position_by_position() {
        // [I-t, I-u, I-u] → [B-t, B-u, I-u]
        let tags = vec![Tag::Inside(0), Tag::Inside(1), Tag::Inside(1)];
        assert_eq!(
            repair_tags(&tags),
            vec![Tag::Begin(0), Tag::Begin(1), Tag::Inside(1)]
        );
    }

    #[test]
    fn brat_round_trip() {
        let doc = RawDocument::new("d", "t", "placed on heparin sodium today");
        let types = drug_types();
        let ann = "T1\tDRUG 10 24\theparin sodium\n";
        let read = read_brat(ann, &doc, &types).unwrap();
        assert_eq!(
            read.mentions,
            vec![EntityMention::new("DRUG", 10, 24, "heparin sodium")]
        );
        assert_eq!(write_brat(&read.mentions), ann);
    }

    #[test]
    fn brat_empty_file() {
        let doc = RawDocument::new("d", "t", "text");
        assert!(read_brat("", &doc, &drug_types())
            .unwrap()
            .mentions
            .is_empty());
    }

    #[test]
    fn brat_end_before_start_is_parse_error() {
        let doc = RawDocument::new("d", "t", "placed on heparin");
        let err = read_brat("T1\tDRUG 9 3\tx\n", &doc, &drug_types()).unwrap_err();
        assert!(matches!(err, AnnotationError::ParseError { line: 1, .. }));
    }

    #[test]
    fn brat_text_mismatch_is_reported() {
        let doc = RawDocument::new("d", "t", "placed on heparin");
        let err = read_brat("T1\tDRUG 0 6\twrongx\n", &doc, &drug_types()).unwrap_err();
        assert!(matches!(err, AnnotationError::TextMismatch { line: 1, .. }));
    }

    #[test]
    fn brat_ignores_non_textbound_lines() {
        let doc = RawDocument::new("d", "t", "placed on heparin");
        let ann = "#1\tAnnotatorNotes T1\tcheck\nT1\tDRUG 10 17\theparin\nA1\tNegated T1\n";
        let read = read_brat(ann, &doc, &drug_types()).unwrap();
        assert_eq!(read.mentions.len(), 1);
        assert_eq!(read.ignored.len(), 2);
    }

    #[test]
    fn conll_round_trip_and_tag_parse() {
        let types = drug_types();
        let text = "on heparin";
        let tokens = toks(text);
        let tags = vec![Tag::Outside, Tag::Begin(0)];
        let sentences = vec![(tokens, tags)];
        let written = write_conll(&sentences, &types);
        assert_eq!(written.lines().count(), 3); // 2 tokens + blank line
        let reread = read_conll(&written, &types, &NormPolicy::matching()).unwrap();
        assert_eq!(reread, sentences);
        assert_eq!(write_conll(&reread, &types), written);
        assert_eq!(Tag::parse("B-DRUG", &types).unwrap(), Tag::Begin(0));
    }

    #[test]
    fn conll_bad_column_count_is_parse_error() {
        let err = read_conll("only\ttwo\n", &drug_types(), &NormPolicy::matching()).unwrap_err();
        assert!(matches!(err, AnnotationError::ParseError { line: 1, .. }));
    }

    /// Random non-overlapping token-aligned mention layouts over a fixed
    /// tokenized sentence.
    fn mention_layouts(
        n_tokens: usize,
        n_types: usize,
    ) -> impl Strategy<Value = Vec<(usize, usize, usize)>> {
        // Vec of (first_token, last_token, type_idx), non-overlapping.
        proptest::collection::vec((0..n_tokens, 0..n_tokens, 0..n_types), 0..5).prop_map(
            move |raw| {
                let mut spans: Vec<(usize, usize, usize)> = raw
                    .into_iter()
                    .map(|(a, b, t)| (a.min(b), a.max(b), t))
                    .collect();
                spans.sort();
                let mut kept: Vec<(usize, usize, usize)> = Vec::new();
                for s in spans {
                    if kept.last().is_none_or(|k| k.1 < s.0) {
                        kept.push(s);
                    }
                }
                kept
            },
        )
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(layout in mention_layouts(8, 3)) {
            let text = "alpha beta gamma delta epsilon zeta eta theta";
            let tokens = toks(text);
            let types = EntityTypeSet::new(["A", "B", "C"]).unwrap();
            let mentions: Vec<EntityMention> = layout
                .iter()
                .map(|&(a, b, t)| {
                    let start = tokens[a].start;
                    let end = tokens[b].end;
                    EntityMention::new(types.name(t), start, end, slice_chars(text, start, end))
                })
                .collect();
            let tags = encode_iob(&tokens, &mentions, &types).unwrap();
            let decoded = decode_iob(text, &tokens, &tags, &types);
            let mut expect = mentions.clone();
            sort_mentions(&mut expect);
            prop_assert_eq!(decoded, expect);
        }

        #[test]
        fn repair_is_idempotent_and_valid(raw in proptest::collection::vec(0usize..7, 0..20)) {
            let tags: Vec<Tag> = raw.into_iter().map(Tag::from_label_index).collect();
            let once = repair_tags(&tags);
            prop_assert_eq!(repair_tags(&once), once.clone());
            let mut prev = None;
            for &t in &once {
                match prev {
                    None => prop_assert!(valid_iob_start(t)),
                    Some(p) => prop_assert!(valid_iob_transition(p, t)),
                }
                prev = Some(t);
            }
        }
    }

    #[test]
    fn encode_document_assigns_mentions_to_sentences() {
        let doc = RawDocument::new("d", "t", "He took aspirin. Fever persisted.");
        let types = EntityTypeSet::new(["DRUG", "SIGN"]).unwrap();
        let tdoc = tokenize_document(doc, &AbbrevList::default(), &NormPolicy::matching());
        let mentions = vec![
            EntityMention::new("DRUG", 8, 15, "aspirin"),
            EntityMention::new("SIGN", 17, 22, "Fever"),
        ];
        let tags = encode_document(&tdoc, &mentions, &types).unwrap();
        assert_eq!(tags.len(), 2);
        let back = decode_document(&tdoc, &tags, &types);
        assert_eq!(back, mentions);
    }
}

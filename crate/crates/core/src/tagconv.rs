//! Conversion of corpora tagged with a language-specific tagset into UPOS.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::treebank::{AnnotatedSentence, Treebank};
use crate::upos::Upos;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TagConvertError {
    #[error("tag map line {line}: {message}")]
    Map { line: usize, message: String },
    #[error("tag map line {line}: duplicate source tag {tag}")]
    Duplicate { line: usize, tag: String },
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error("unmapped source tag {0}")]
    Unmapped(String),
}

/// What to do with a source tag that has no entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fallback {
    Tag(Upos),
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagMap {
    pub entries: BTreeMap<String, Upos>,
    pub default: Fallback,
}

impl Default for TagMap {
    fn default() -> Self {
        TagMap {
            entries: BTreeMap::new(),
            default: Fallback::Fail,
        }
    }
}

impl TagMap {
    pub fn lookup(&self, tag: &str) -> Option<Upos> {
        match (self.entries.get(tag), self.default) {
            (Some(t), _) => Some(*t),
            (None, Fallback::Tag(t)) => Some(t),
            (None, Fallback::Fail) => None,
        }
    }
}

/// Parse a mapping table: `SOURCE<TAB>TARGET` lines, `#` comments, blank
/// lines, and an optional `DEFAULT<TAB>X` line. Without a DEFAULT line the
/// map is in fail mode.
pub fn load_tag_map(text: &str) -> Result<TagMap, TagConvertError> {
    let mut map = TagMap::default();
    let mut saw_default = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (src, tgt) = line.split_once('\t').ok_or_else(|| TagConvertError::Map {
            line: line_no,
            message: "expected SOURCE<TAB>TARGET".into(),
        })?;
        let (src, tgt) = (src.trim(), tgt.trim());
        if src.is_empty() {
            return Err(TagConvertError::Map {
                line: line_no,
                message: "empty source tag".into(),
            });
        }
        if src == "DEFAULT" {
            if saw_default {
                return Err(TagConvertError::Duplicate { line: line_no, tag: src.into() });
            }
            saw_default = true;
            map.default = if tgt.eq_ignore_ascii_case("fail") {
                Fallback::Fail
            } else {
                Fallback::Tag(parse_target(tgt, line_no)?)
            };
            continue;
        }
        let upos = parse_target(tgt, line_no)?;
        if map.entries.insert(src.to_owned(), upos).is_some() {
            return Err(TagConvertError::Duplicate { line: line_no, tag: src.into() });
        }
    }
    Ok(map)
}

fn parse_target(tgt: &str, line: usize) -> Result<Upos, TagConvertError> {
    tgt.parse().map_err(|e: crate::upos::UnknownTag| TagConvertError::Map {
        line,
        message: e.to_string(),
    })
}

/// Sentences of `(form, tag)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TaggedCorpus {
    pub sentences: Vec<Vec<(String, String)>>,
}

/// Read a tagged corpus. Two layouts are accepted and told apart by the
/// first non-blank line: two-column TSV with blank lines between sentences,
/// or one sentence per line with space-separated `form/TAG` tokens. In the
/// slash layout the tag follows the last `/`, so forms may contain slashes.
pub fn parse_tagged_corpus(text: &str) -> Result<TaggedCorpus, TagConvertError> {
    let tsv = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .map(|l| l.contains('\t'))
        .unwrap_or(false);
    let mut corpus = TaggedCorpus::default();
    let bad = |line: usize, message: &str| TagConvertError::Corpus {
        line,
        message: message.to_owned(),
    };
    if tsv {
        let mut current = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                if !current.is_empty() {
                    corpus.sentences.push(std::mem::take(&mut current));
                }
                continue;
            }
            let mut cols = line.split('\t');
            match (cols.next(), cols.next(), cols.next()) {
                (Some(form), Some(tag), None) if !form.is_empty() && !tag.is_empty() => {
                    current.push((form.to_owned(), tag.to_owned()));
                }
                _ => return Err(bad(idx + 1, "expected FORM<TAB>TAG")),
            }
        }
        if !current.is_empty() {
            corpus.sentences.push(current);
        }
    } else {
        for (idx, line) in text.lines().enumerate() {
            let mut sentence = Vec::new();
            for item in line.split_whitespace() {
                match item.rsplit_once('/') {
                    Some((form, tag)) if !form.is_empty() && !tag.is_empty() => {
                        sentence.push((form.to_owned(), tag.to_owned()));
                    }
                    _ => return Err(bad(idx + 1, &format!("expected form/TAG, got {item:?}"))),
                }
            }
            if !sentence.is_empty() {
                corpus.sentences.push(sentence);
            }
        }
    }
    Ok(corpus)
}

/// One row of the conversion report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnmappedTag {
    pub source_tag: String,
    pub count: usize,
    pub mapped_to: Upos,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConversionReport {
    /// Sorted by source tag.
    pub unmapped: Vec<UnmappedTag>,
}

impl ConversionReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("source_tag\tcount\tmapped_to\n");
        for row in &self.unmapped {
            let _ = writeln!(out, "{}\t{}\t{}", row.source_tag, row.count, row.mapped_to);
        }
        out
    }
}

/// Map every token's tag through `map`. Only form and UPOS are set on the
/// output tokens; each sentence gets a `sent_id` comment.
pub fn convert_corpus(
    corpus: &TaggedCorpus,
    map: &TagMap,
) -> Result<(Treebank, ConversionReport), TagConvertError> {
    let mut unmapped: BTreeMap<&str, (usize, Upos)> = BTreeMap::new();
    let mut tb = Treebank::new("converted");
    for (idx, sentence) in corpus.sentences.iter().enumerate() {
        let forms: Vec<&str> = sentence.iter().map(|(f, _)| f.as_str()).collect();
        let mut out = AnnotatedSentence::from_forms(&forms);
        for (tok, (_, tag)) in out.tokens.iter_mut().zip(sentence) {
            let upos = match map.entries.get(tag) {
                Some(&u) => u,
                None => match map.default {
                    Fallback::Tag(u) => {
                        unmapped.entry(tag.as_str()).or_insert((0, u)).0 += 1;
                        u
                    }
                    Fallback::Fail => return Err(TagConvertError::Unmapped(tag.clone())),
                },
            };
            tok.upos = Some(upos);
        }
        out.set_comment("sent_id", &(idx + 1).to_string());
        tb.sentences.push(out);
    }
    let report = ConversionReport {
        unmapped: unmapped
            .into_iter()
            .map(|(tag, (count, mapped_to))| UnmappedTag {
                source_tag: tag.to_owned(),
                count,
                mapped_to,
            })
            .collect(),
    };
    Ok((tb, report))
}

//! CoNLL-U reading and writing.
//!
//! The writer emits canonical text: `# ` comments, range lines before the
//! first word they cover, ten tab-separated columns with `_` for unset
//! fields, and a blank line after every sentence. Parsing canonical text
//! and writing it back reproduces the input byte for byte.

use std::fmt::Write as _;

use thiserror::Error;

use super::{find_cycles, AnnotatedSentence, Features, MultiwordSpan, Token, Treebank};
use crate::upos::Upos;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ConlluError {
    #[error("line {line}: malformed column count (expected 10, found {found})")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: non-consecutive id {found} (expected {expected})")]
    NonConsecutiveId { line: usize, expected: usize, found: String },
    #[error("line {line}: head out of range ({head} in a {len}-token sentence)")]
    HeadOutOfRange { line: usize, head: usize, len: usize },
    #[error("line {line}: cycle detected at tokens {ids:?}")]
    Cycle { line: usize, ids: Vec<usize> },
    #[error("line {line}: invalid {column} value {value:?}: {reason}")]
    InvalidField {
        line: usize,
        column: &'static str,
        value: String,
        reason: String,
    },
    #[error("line {line}: empty nodes are not supported")]
    EmptyNode { line: usize },
    #[error("line {line}: bad multiword range {range:?}")]
    BadRange { line: usize, range: String },
}

fn optional(field: &str) -> Option<String> {
    (field != "_").then(|| field.to_owned())
}

struct PendingSentence {
    sentence: AnnotatedSentence,
    token_lines: Vec<usize>,
    open_span_end: usize,
}

impl PendingSentence {
    fn new() -> Self {
        PendingSentence {
            sentence: AnnotatedSentence::new(),
            token_lines: Vec::new(),
            open_span_end: 0,
        }
    }

    fn is_empty(&self) -> bool {
        self.sentence.tokens.is_empty() && self.sentence.comments.is_empty() && self.sentence.spans.is_empty()
    }

    fn finish(self) -> Result<AnnotatedSentence, ConlluError> {
        let PendingSentence {
            sentence,
            token_lines,
            ..
        } = self;
        let n = sentence.tokens.len();
        if let Some(span) = sentence.spans.iter().find(|s| s.end > n) {
            let line = token_lines.last().copied().unwrap_or(0);
            return Err(ConlluError::BadRange {
                line,
                range: format!("{}-{}", span.start, span.end),
            });
        }
        for (tok, &line) in sentence.tokens.iter().zip(&token_lines) {
            if let Some(head) = tok.head {
                if head > n {
                    return Err(ConlluError::HeadOutOfRange { line, head, len: n });
                }
            }
        }
        let heads: Vec<Option<usize>> = sentence.tokens.iter().map(|t| t.head).collect();
        if let Some(cycle) = find_cycles(&heads).into_iter().next() {
            return Err(ConlluError::Cycle {
                line: token_lines[cycle[0] - 1],
                ids: cycle,
            });
        }
        Ok(sentence)
    }
}

/// Parse CoNLL-U text into a treebank.
pub fn parse_conllu(text: &str) -> Result<Treebank, ConlluError> {
    let mut treebank = Treebank::default();
    let mut pending = PendingSentence::new();

    for (idx, line) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            if !pending.is_empty() {
                let done = std::mem::replace(&mut pending, PendingSentence::new());
                treebank.sentences.push(done.finish()?);
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.strip_prefix(' ').unwrap_or(comment);
            pending.sentence.comments.push(comment.to_owned());
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(ConlluError::ColumnCount {
                line: line_no,
                found: cols.len(),
            });
        }
        let expected = pending.sentence.tokens.len() + 1;
        let id_field = cols[0];

        if id_field.contains('.') {
            return Err(ConlluError::EmptyNode { line: line_no });
        }
        if let Some((start, end)) = id_field.split_once('-') {
            let bad = || ConlluError::BadRange {
                line: line_no,
                range: id_field.to_owned(),
            };
            let start: usize = start.parse().map_err(|_| bad())?;
            let end: usize = end.parse().map_err(|_| bad())?;
            if start != expected || end < start || expected <= pending.open_span_end {
                return Err(bad());
            }
            pending.open_span_end = end;
            pending.sentence.spans.push(MultiwordSpan {
                start,
                end,
                surface: cols[1].to_owned(),
                misc: optional(cols[9]),
            });
            continue;
        }

        let id: usize = id_field.parse().ok().filter(|&id| id == expected).ok_or_else(|| {
            ConlluError::NonConsecutiveId {
                line: line_no,
                expected,
                found: id_field.to_owned(),
            }
        })?;

        let invalid = |column: &'static str, value: &str, reason: String| ConlluError::InvalidField {
            line: line_no,
            column,
            value: value.to_owned(),
            reason,
        };

        let upos = match cols[3] {
            "_" => None,
            tag => Some(
                tag.parse::<Upos>()
                    .map_err(|e| invalid("UPOS", tag, e.to_string()))?,
            ),
        };
        let feats = Features::parse(cols[5]).map_err(|e| invalid("FEATS", cols[5], e))?;
        let head = match cols[6] {
            "_" => None,
            h => Some(
                h.parse::<usize>()
                    .map_err(|e| invalid("HEAD", h, e.to_string()))?,
            ),
        };

        pending.sentence.tokens.push(Token {
            id,
            form: cols[1].to_owned(),
            lemma: optional(cols[2]),
            upos,
            xpos: optional(cols[4]),
            feats,
            head,
            deprel: optional(cols[7]),
            deps: optional(cols[8]),
            misc: optional(cols[9]),
        });
        pending.token_lines.push(line_no);
    }
    if !pending.is_empty() {
        treebank.sentences.push(pending.finish()?);
    }
    Ok(treebank)
}

fn field(value: &Option<String>) -> &str {
    value.as_deref().unwrap_or("_")
}

/// Serialize a treebank as canonical CoNLL-U.
pub fn write_conllu(treebank: &Treebank) -> String {
    let mut out = String::new();
    for sentence in &treebank.sentences {
        write_sentence(&mut out, sentence);
    }
    out
}

fn write_sentence(out: &mut String, sentence: &AnnotatedSentence) {
    for comment in &sentence.comments {
        out.push_str("# ");
        out.push_str(comment);
        out.push('\n');
    }
    for tok in &sentence.tokens {
        for span in sentence.spans.iter().filter(|s| s.start == tok.id) {
            let _ = writeln!(
                out,
                "{}-{}\t{}\t_\t_\t_\t_\t_\t_\t_\t{}",
                span.start,
                span.end,
                span.surface,
                field(&span.misc)
            );
        }
        let upos = tok.upos.map(|u| u.as_str()).unwrap_or("_");
        let head = tok
            .head
            .map(|h| h.to_string())
            .unwrap_or_else(|| "_".to_owned());
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            tok.id,
            tok.form,
            field(&tok.lemma),
            upos,
            field(&tok.xpos),
            tok.feats,
            head,
            field(&tok.deprel),
            field(&tok.deps),
            field(&tok.misc)
        );
    }
    out.push('\n');
}

//! CoNLL 2018 style scoring of a system treebank against gold, plus
//! k-fold cross-validation.

mod cv;

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::treebank::Treebank;
use crate::upos::Upos;

pub use cv::{cross_validate, cv_tsv, five_number, make_folds, CvReport, FiveNumber, FoldPlan};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("text mismatch: gold and system differ at character {offset} ({gold:?} vs {system:?})")]
    TextMismatch { offset: usize, gold: String, system: String },
    #[error("cannot make {k} folds from {n} sentences")]
    BadFolds { k: usize, n: usize },
    #[error("fold {fold}: {message}")]
    Fold { fold: usize, message: String },
}

/// A word located in the shared character stream. Words of one multiword
/// token share its range and are told apart by `part`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Located {
    start: usize,
    end: usize,
    part: usize,
}

struct Layout {
    /// Per word: location plus `(sentence, word id)`.
    words: Vec<(Located, usize, usize)>,
    tokens: Vec<(usize, usize)>,
    sentences: Vec<(usize, usize)>,
    stream: Vec<char>,
}

fn non_ws(text: &str) -> impl Iterator<Item = char> + '_ {
    text.chars().filter(|c| !c.is_whitespace())
}

fn layout(tb: &Treebank) -> Layout {
    let mut out = Layout { words: Vec::new(), tokens: Vec::new(), sentences: Vec::new(), stream: Vec::new() };
    for (si, s) in tb.sentences.iter().enumerate() {
        let sent_start = out.stream.len();
        let mut id = 1;
        while id <= s.len() {
            let start = out.stream.len();
            if let Some(span) = s.spans.iter().find(|sp| sp.start == id && sp.end >= id) {
                out.stream.extend(non_ws(&span.surface));
                let end = out.stream.len();
                for (part, wid) in (span.start..=span.end.min(s.len())).enumerate() {
                    out.words.push((Located { start, end, part: part + 1 }, si, wid));
                }
                out.tokens.push((start, end));
                id = span.end + 1;
            } else {
                out.stream.extend(non_ws(&s.token(id).form));
                let end = out.stream.len();
                out.words.push((Located { start, end, part: 0 }, si, id));
                out.tokens.push((start, end));
                id += 1;
            }
        }
        if !s.is_empty() {
            out.sentences.push((sent_start, out.stream.len()));
        }
    }
    out
}

/// Number of equal items in two strictly increasing sequences.
fn count_matches<T: Ord>(a: &[T], b: &[T]) -> usize {
    matched_pairs(a, b).len()
}

fn matched_pairs<T: Ord>(a: &[T], b: &[T]) -> Vec<(usize, usize)> {
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push((i, j));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn check_text(gold: &Layout, sys: &Layout) -> Result<(), EvalError> {
    if gold.stream == sys.stream {
        return Ok(());
    }
    let offset = gold.stream.iter().zip(&sys.stream).take_while(|(a, b)| a == b).count();
    let snippet = |s: &[char]| s.iter().skip(offset).take(10).collect::<String>();
    Err(EvalError::TextMismatch { offset, gold: snippet(&gold.stream), system: snippet(&sys.stream) })
}

fn word<'a>(tb: &'a Treebank, layout: &Layout, i: usize) -> &'a crate::Token {
    let (_, si, id) = layout.words[i];
    tb.sentences[si].token(id)
}

/// A word located by `(sentence index, token id)`.
pub type WordRef = (usize, usize);

/// Matched words as `(gold, system)` pairs.
pub fn align_words(gold: &Treebank, sys: &Treebank) -> Result<Vec<(WordRef, WordRef)>, EvalError> {
    let (g, s) = (layout(gold), layout(sys));
    check_text(&g, &s)?;
    let gl: Vec<Located> = g.words.iter().map(|w| w.0).collect();
    let sl: Vec<Located> = s.words.iter().map(|w| w.0).collect();
    Ok(matched_pairs(&gl, &sl)
        .into_iter()
        .map(|(i, j)| ((g.words[i].1, g.words[i].2), (s.words[j].1, s.words[j].2)))
        .collect())
}

/// Precision, recall and F1 as percentages, with the underlying counts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Score {
    pub gold: usize,
    pub system: usize,
    pub correct: usize,
}

impl Score {
    fn new(gold: usize, system: usize, correct: usize) -> Score {
        Score { gold, system, correct }
    }

    pub fn precision(&self) -> f64 {
        if self.system == 0 { 0.0 } else { 100.0 * self.correct as f64 / self.system as f64 }
    }

    pub fn recall(&self) -> f64 {
        if self.gold == 0 { 0.0 } else { 100.0 * self.correct as f64 / self.gold as f64 }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Tokens,
    Words,
    Sentences,
    Upos,
    Feats,
    Lemmas,
    Uas,
    Las,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Tokens,
        Metric::Words,
        Metric::Sentences,
        Metric::Upos,
        Metric::Feats,
        Metric::Lemmas,
        Metric::Uas,
        Metric::Las,
    ];
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Tokens => "Tokens",
            Metric::Words => "Words",
            Metric::Sentences => "Sentences",
            Metric::Upos => "UPOS",
            Metric::Feats => "UFeats",
            Metric::Lemmas => "Lemmas",
            Metric::Uas => "UAS",
            Metric::Las => "LAS",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub tokens: Score,
    pub words: Score,
    pub sentences: Score,
    pub upos: Score,
    pub feats: Score,
    pub lemmas: Score,
    pub uas: Score,
    pub las: Score,
}

impl MetricsReport {
    pub fn get(&self, m: Metric) -> Score {
        match m {
            Metric::Tokens => self.tokens,
            Metric::Words => self.words,
            Metric::Sentences => self.sentences,
            Metric::Upos => self.upos,
            Metric::Feats => self.feats,
            Metric::Lemmas => self.lemmas,
            Metric::Uas => self.uas,
            Metric::Las => self.las,
        }
    }

    /// `metric precision recall f1` rows, two decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tprecision\trecall\tf1\n");
        for m in Metric::ALL {
            let s = self.get(m);
            let _ = writeln!(out, "{m}\t{:.2}\t{:.2}\t{:.2}", s.precision(), s.recall(), s.f1());
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ScoreOptions {
    /// Leave punctuation out of UAS and LAS.
    pub no_punct: bool,
}

pub fn score(gold: &Treebank, sys: &Treebank) -> Result<MetricsReport, EvalError> {
    score_with(gold, sys, ScoreOptions::default())
}

pub fn score_with(gold: &Treebank, sys: &Treebank, opts: ScoreOptions) -> Result<MetricsReport, EvalError> {
    let (g, s) = (layout(gold), layout(sys));
    check_text(&g, &s)?;
    let gl: Vec<Located> = g.words.iter().map(|w| w.0).collect();
    let sl: Vec<Located> = s.words.iter().map(|w| w.0).collect();
    let pairs = matched_pairs(&gl, &sl);

    // Global index of each word's head word, `None` for the root.
    let head_index = |layout: &Layout, tb: &Treebank| -> Vec<Option<usize>> {
        let mut first = vec![0usize; tb.len()];
        for (i, w) in layout.words.iter().enumerate().rev() {
            first[w.1] = i;
        }
        // Words of one sentence are laid out contiguously in id order.
        layout
            .words
            .iter()
            .map(|&(_, si, id)| {
                let h = tb.sentences[si].token(id).head.unwrap_or(0);
                (h != 0).then(|| first[si] + h - 1)
            })
            .collect()
    };
    let (g_heads, s_heads) = (head_index(&g, gold), head_index(&s, sys));
    let mut sys_of_gold = vec![None; g.words.len()];
    for &(i, j) in &pairs {
        sys_of_gold[i] = Some(j);
    }

    let is_punct = |u: Option<Upos>| u == Some(Upos::Punct);
    let gold_punct: Vec<bool> = (0..g.words.len()).map(|i| is_punct(word(gold, &g, i).upos)).collect();
    let mut sys_punct: Vec<bool> = (0..s.words.len()).map(|j| is_punct(word(sys, &s, j).upos)).collect();
    for &(i, j) in &pairs {
        sys_punct[j] = gold_punct[i];
    }
    let attach_gold = (0..g.words.len()).filter(|&i| !(opts.no_punct && gold_punct[i])).count();
    let attach_sys = (0..s.words.len()).filter(|&j| !(opts.no_punct && sys_punct[j])).count();

    let (mut upos, mut feats, mut lemmas, mut uas, mut las) = (0, 0, 0, 0, 0);
    for &(i, j) in &pairs {
        let (gt, st) = (word(gold, &g, i), word(sys, &s, j));
        upos += usize::from(gt.upos == st.upos);
        feats += usize::from(gt.feats == st.feats);
        lemmas += usize::from(gt.lemma == st.lemma);
        if opts.no_punct && gold_punct[i] {
            continue;
        }
        let head_ok = match (g_heads[i], s_heads[j]) {
            (None, None) => st.head == gt.head,
            (Some(gh), Some(sh)) => sys_of_gold[gh] == Some(sh),
            _ => false,
        };
        if head_ok {
            uas += 1;
            las += usize::from(gt.universal_deprel() == st.universal_deprel());
        }
    }

    let (nw_g, nw_s) = (g.words.len(), s.words.len());
    Ok(MetricsReport {
        tokens: Score::new(g.tokens.len(), s.tokens.len(), count_matches(&g.tokens, &s.tokens)),
        words: Score::new(nw_g, nw_s, pairs.len()),
        sentences: Score::new(g.sentences.len(), s.sentences.len(), count_matches(&g.sentences, &s.sentences)),
        upos: Score::new(nw_g, nw_s, upos),
        feats: Score::new(nw_g, nw_s, feats),
        lemmas: Score::new(nw_g, nw_s, lemmas),
        uas: Score::new(attach_gold, attach_sys, uas),
        las: Score::new(attach_gold, attach_sys, las),
    })
}

//! IBM Model 1 word alignment with a NULL source word.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::ProjectError;

/// Key of the NULL source word in a [`LexTable`].
pub const NULL_WORD: &str = "<NULL>";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParallelPair {
    pub source_tokens: Vec<String>,
    pub target_tokens: Vec<String>,
    pub source_lang: String,
}

impl ParallelPair {
    pub fn new(source: &str, target: &str, lang: &str) -> Self {
        ParallelPair {
            source_tokens: source.split_whitespace().map(str::to_owned).collect(),
            target_tokens: target.split_whitespace().map(str::to_owned).collect(),
            source_lang: lang.to_owned(),
        }
    }
}

/// Translation probabilities `t(target | source)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LexTable {
    table: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignmentLink {
    pub src_index: usize,
    pub tgt_index: usize,
    pub prob: f64,
}

impl LexTable {
    pub fn prob(&self, source: &str, target: &str) -> f64 {
        self.table
            .get(source)
            .and_then(|row| row.get(target))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn null_prob(&self, target: &str) -> f64 {
        self.prob(NULL_WORD, target)
    }

    pub fn set(&mut self, source: &str, target: &str, prob: f64) {
        self.table
            .entry(source.to_owned())
            .or_default()
            .insert(target.to_owned(), prob);
    }

    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.table.keys().map(String::as_str)
    }

    pub fn row(&self, source: &str) -> Option<&BTreeMap<String, f64>> {
        self.table.get(source)
    }

    /// `source<TAB>target<TAB>prob` lines after a version header.
    pub fn to_text(&self) -> String {
        let mut out = String::from("udkit-lex 1\n");
        for (src, row) in &self.table {
            for (tgt, p) in row {
                let _ = writeln!(out, "{src}\t{tgt}\t{p}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<LexTable, ProjectError> {
        let mut lines = text.lines().enumerate();
        if lines.next().map(|(_, l)| l) != Some("udkit-lex 1") {
            return Err(ProjectError::Format { line: 1, message: "expected header \"udkit-lex 1\"".into() });
        }
        let mut table = LexTable::default();
        for (idx, line) in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            let [src, tgt, p] = fields.as_slice() else {
                return Err(ProjectError::Format { line: idx + 1, message: "expected 3 fields".into() });
            };
            let p: f64 = p
                .parse()
                .map_err(|_| ProjectError::Format { line: idx + 1, message: format!("bad probability {p:?}") })?;
            table.set(src, tgt, p);
        }
        Ok(table)
    }
}

fn check_pair(pair: &ParallelPair, idx: usize) -> Result<(), ProjectError> {
    if pair.source_tokens.is_empty() || pair.target_tokens.is_empty() {
        return Err(ProjectError::EmptySide(idx + 1));
    }
    Ok(())
}

/// Train `t(f|e)` with EM. Initialization is uniform over the target words
/// each source word (NULL included) co-occurs with.
pub fn train_aligner(corpus: &[ParallelPair], iters: usize) -> Result<LexTable, ProjectError> {
    if corpus.is_empty() {
        return Err(ProjectError::EmptyCorpus);
    }
    if iters == 0 {
        return Err(ProjectError::ZeroIterations);
    }
    for (idx, pair) in corpus.iter().enumerate() {
        check_pair(pair, idx)?;
    }
    let mut cooc: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for pair in corpus {
        for e in pair.source_tokens.iter().map(String::as_str).chain([NULL_WORD]) {
            cooc.entry(e)
                .or_default()
                .extend(pair.target_tokens.iter().map(String::as_str));
        }
    }
    let mut table = LexTable::default();
    for (e, fs) in &cooc {
        let p = 1.0 / fs.len() as f64;
        for f in fs {
            table.set(e, f, p);
        }
    }
    for _ in 0..iters {
        table = em_step(corpus, &table);
    }
    Ok(table)
}

/// One expectation-maximization update.
pub fn em_step(corpus: &[ParallelPair], table: &LexTable) -> LexTable {
    let mut counts: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for pair in corpus {
        let sources: Vec<&str> = pair.source_tokens.iter().map(String::as_str).chain([NULL_WORD]).collect();
        for f in &pair.target_tokens {
            let total: f64 = sources.iter().map(|e| table.prob(e, f)).sum();
            if total <= 0.0 {
                continue;
            }
            for e in &sources {
                let share = table.prob(e, f) / total;
                *counts.entry(e).or_default().entry(f).or_insert(0.0) += share;
            }
        }
    }
    let mut next = LexTable::default();
    for (e, row) in counts {
        let norm: f64 = row.values().sum();
        for (f, c) in row {
            next.set(e, f, if norm > 0.0 { c / norm } else { 0.0 });
        }
    }
    next
}

/// Corpus log-likelihood under Model 1 with uniform alignment priors:
/// `Σ_pairs Σ_j ln( Σ_i t(f_j|e_i) / (l+1) )`.
pub fn log_likelihood(corpus: &[ParallelPair], table: &LexTable) -> f64 {
    corpus
        .iter()
        .map(|pair| {
            let l = pair.source_tokens.len() as f64 + 1.0;
            pair.target_tokens
                .iter()
                .map(|f| {
                    let s: f64 = pair
                        .source_tokens
                        .iter()
                        .map(|e| table.prob(e, f))
                        .sum::<f64>()
                        + table.null_prob(f);
                    (s / l).ln()
                })
                .sum::<f64>()
        })
        .sum()
}

pub const DEFAULT_FLOOR: f64 = 0.1;

/// Posterior links. For each target token the source position with the
/// highest posterior wins (leftmost on ties, and a real word beats NULL on
/// ties); the link is kept if that is not NULL and clears `floor`.
pub fn align(pair: &ParallelPair, table: &LexTable, floor: f64) -> Vec<AlignmentLink> {
    let mut links = Vec::new();
    for (j, f) in pair.target_tokens.iter().enumerate() {
        let scores: Vec<f64> = pair.source_tokens.iter().map(|e| table.prob(e, f)).collect();
        let null = table.null_prob(f);
        let total: f64 = scores.iter().sum::<f64>() + null;
        if total <= 0.0 {
            continue;
        }
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        if null > scores[best] {
            continue;
        }
        let prob = scores[best] / total;
        if prob >= floor && prob > 0.0 {
            links.push(AlignmentLink { src_index: best, tgt_index: j, prob });
        }
    }
    links
}

/// `sent_id<TAB>src<TAB>tgt<TAB>prob` rows (0-based indices).
pub fn links_tsv(rows: &[(String, Vec<AlignmentLink>)]) -> String {
    let mut out = String::from("sent_id\tsrc\ttgt\tprob\n");
    for (id, links) in rows {
        for l in links {
            let _ = writeln!(out, "{id}\t{}\t{}\t{:.6}", l.src_index, l.tgt_index, l.prob);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(rows: &[(&str, &str, usize)]) -> Vec<ParallelPair> {
        rows.iter()
            .flat_map(|(s, t, n)| std::iter::repeat_n(ParallelPair::new(s, t, "en"), *n))
            .collect()
    }

    #[test]
    fn single_pair_converges_immediately() {
        let table = train_aligner(&corpus(&[("a", "x", 1)]), 1).unwrap();
        assert_eq!(table.prob("a", "x"), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(train_aligner(&corpus(&[("a", "x", 1)]), 0).unwrap_err(), ProjectError::ZeroIterations);
        assert_eq!(train_aligner(&[], 3).unwrap_err(), ProjectError::EmptyCorpus);
        assert!(train_aligner(&corpus(&[("a", "", 1)]), 3).is_err());
    }

    #[test]
    fn rows_are_normalised() {
        let c = corpus(&[("a b", "x y", 3), ("b c", "y z", 2), ("c", "z", 1)]);
        let table = train_aligner(&c, 4).unwrap();
        for src in table.sources() {
            let sum: f64 = table.row(src).unwrap().values().sum();
            assert!((sum - 1.0).abs() < 1e-9, "{src}: {sum}");
        }
    }

    #[test]
    fn align_rules() {
        let mut table = LexTable::default();
        table.set("a", "x", 1.0);
        let links = align(&ParallelPair::new("a", "x", "en"), &table, DEFAULT_FLOOR);
        assert_eq!(links, vec![AlignmentLink { src_index: 0, tgt_index: 0, prob: 1.0 }]);
        assert!(align(&ParallelPair::new("a", "q", "en"), &table, DEFAULT_FLOOR).is_empty());
        let links = align(&ParallelPair::new("a a", "x", "en"), &table, DEFAULT_FLOOR);
        assert_eq!(links[0].src_index, 0);
        assert!((links[0].prob - 0.5).abs() < 1e-12);
        // NULL wins only when strictly better.
        table.set(NULL_WORD, "x", 1.0);
        assert_eq!(align(&ParallelPair::new("a", "x", "en"), &table, DEFAULT_FLOOR).len(), 1);
        table.set(NULL_WORD, "x", 2.0);
        assert!(align(&ParallelPair::new("a", "x", "en"), &table, DEFAULT_FLOOR).is_empty());
    }

    #[test]
    fn table_text_round_trip() {
        let table = train_aligner(&corpus(&[("a b", "x y", 2), ("a", "x", 1)]), 3).unwrap();
        assert_eq!(LexTable::from_text(&table.to_text()).unwrap(), table);
        assert!(LexTable::from_text("bad").is_err());
    }
}

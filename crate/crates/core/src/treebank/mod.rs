//! In-memory model of UD-annotated text.
//!
//! A [`Treebank`] is an ordered list of [`AnnotatedSentence`]s. Each
//! sentence holds its syntactic words as [`Token`]s (ids `1..=n`), the
//! multiword surface tokens that group some of them, its comment lines,
//! and optionally the character offsets of each token in the document
//! it was segmented from.

mod conllu;

pub use conllu::{parse_conllu, write_conllu, ConlluError};

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::upos::Upos;

/// Morphological features: unique keys, kept sorted case-insensitively.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Features(Vec<(String, String)>);

fn feature_order(key: &str) -> (String, &str) {
    (key.to_lowercase(), key)
}

impl Features {
    pub fn new() -> Self {
        Features(Vec::new())
    }

    /// Insert or replace a feature.
    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        let value = value.into();
        match self
            .0
            .binary_search_by(|(k, _)| feature_order(k).cmp(&feature_order(&key)))
        {
            Ok(idx) => self.0[idx].1 = value,
            Err(idx) => self.0.insert(idx, (key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parse a FEATS column value. `_` is the empty set.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut feats = Features::new();
        if text == "_" {
            return Ok(feats);
        }
        for pair in text.split('|') {
            let (k, v) = pair
                .split_once('=')
                .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                .ok_or_else(|| format!("malformed feature {pair:?}"))?;
            if feats.get(k).is_some() {
                return Err(format!("duplicate feature key {k:?}"));
            }
            feats.insert(k, v);
        }
        Ok(feats)
    }
}

impl fmt::Display for Features {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("_");
        }
        for (idx, (k, v)) in self.0.iter().enumerate() {
            if idx > 0 {
                f.write_str("|")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Features {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut feats = Features::new();
        for (k, v) in iter {
            feats.insert(k, v);
        }
        feats
    }
}

/// One syntactic word of a sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub id: usize,
    pub form: String,
    pub lemma: Option<String>,
    pub upos: Option<Upos>,
    pub xpos: Option<String>,
    pub feats: Features,
    pub head: Option<usize>,
    pub deprel: Option<String>,
    /// Enhanced dependencies, carried through verbatim.
    pub deps: Option<String>,
    pub misc: Option<String>,
}

impl Token {
    pub fn new(id: usize, form: impl Into<String>) -> Self {
        Token {
            id,
            form: form.into(),
            lemma: None,
            upos: None,
            xpos: None,
            feats: Features::new(),
            head: None,
            deprel: None,
            deps: None,
            misc: None,
        }
    }

    /// The universal part of the relation label (before any `:` subtype).
    pub fn universal_deprel(&self) -> Option<&str> {
        self.deprel
            .as_deref()
            .map(|rel| rel.split(':').next().unwrap_or(rel))
    }

    /// Look up a `Key=Value` entry of the MISC column.
    pub fn misc_value(&self, key: &str) -> Option<&str> {
        self.misc.as_deref()?.split('|').find_map(|entry| {
            entry
                .split_once('=')
                .filter(|(k, _)| *k == key)
                .map(|(_, v)| v)
        })
    }
}

/// A surface token spanning several syntactic words (`i-j` lines).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiwordSpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub misc: Option<String>,
}

/// A structural problem found by [`AnnotatedSentence::validate_tree`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    MissingHead(usize),
    HeadOutOfRange { id: usize, head: usize },
    NoRoot,
    MultipleRoots(Vec<usize>),
    /// Token ids on the cycle, ascending. A self-loop is a cycle of one.
    Cycle(Vec<usize>),
}

fn join_ids(ids: &[usize]) -> String {
    ids.iter()
        .map(|id| id.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingHead(id) => write!(f, "missing head at token {id}"),
            Violation::HeadOutOfRange { id, head } => {
                write!(f, "head out of range at token {id} ({head})")
            }
            Violation::NoRoot => f.write_str("no root"),
            Violation::MultipleRoots(ids) => write!(f, "multiple roots at tokens {}", join_ids(ids)),
            Violation::Cycle(ids) => write!(f, "cycle at tokens {}", join_ids(ids)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ReorderError {
    #[error("permutation is not a bijection over 1..={0}")]
    NotBijection(usize),
    #[error("token {id} is kept but its head {head} is not")]
    HeadNotKept { id: usize, head: usize },
    #[error("token id {0} out of range")]
    OutOfRange(usize),
}

/// A sentence: tokens, multiword spans, comments and optional offsets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub tokens: Vec<Token>,
    pub spans: Vec<MultiwordSpan>,
    pub comments: Vec<String>,
    /// Per-token `(start, end)` character offsets into the source document.
    /// Only set for sentences produced by the segmenter.
    pub char_offsets: Option<Vec<(usize, usize)>>,
}

impl AnnotatedSentence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build a sentence from forms, ids assigned `1..=n`.
    pub fn from_forms<S: AsRef<str>>(forms: &[S]) -> Self {
        AnnotatedSentence {
            tokens: forms
                .iter()
                .enumerate()
                .map(|(idx, form)| Token::new(idx + 1, form.as_ref()))
                .collect(),
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token by 1-based id.
    pub fn token(&self, id: usize) -> &Token {
        &self.tokens[id - 1]
    }

    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }

    pub fn heads_complete(&self) -> bool {
        self.tokens.iter().all(|t| t.head.is_some())
    }

    /// Id of the first token attached to the virtual root.
    pub fn root(&self) -> Option<usize> {
        self.tokens
            .iter()
            .find(|t| t.head == Some(0))
            .map(|t| t.id)
    }

    /// Ids of the tokens whose head is `head`, ascending.
    pub fn dependents(&self, head: usize) -> Vec<usize> {
        self.tokens
            .iter()
            .filter(|t| t.head == Some(head))
            .map(|t| t.id)
            .collect()
    }

    /// `id` and all of its descendants, ascending.
    pub fn subtree(&self, id: usize) -> Vec<usize> {
        let mut out = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(node) = stack.pop() {
            if out.insert(node) {
                stack.extend(self.dependents(node));
            }
        }
        out.into_iter().collect()
    }

    /// Value of a `# key = value` comment.
    pub fn comment_value(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            c.split_once('=')
                .filter(|(k, _)| k.trim() == key)
                .map(|(_, v)| v.trim())
        })
    }

    /// Set or replace a `# key = value` comment.
    pub fn set_comment(&mut self, key: &str, value: &str) {
        let line = format!("{key} = {value}");
        match self.comments.iter_mut().find(|c| {
            c.split_once('=')
                .map(|(k, _)| k.trim() == key)
                .unwrap_or(false)
        }) {
            Some(existing) => *existing = line,
            None => self.comments.push(line),
        }
    }

    pub fn sent_id(&self) -> Option<&str> {
        self.comment_value("sent_id")
    }

    /// The surface text: the `text` comment if present, otherwise the
    /// surface tokens joined by spaces (honouring `SpaceAfter=No`).
    pub fn raw_text(&self) -> String {
        if let Some(text) = self.comment_value("text") {
            return text.to_owned();
        }
        let mut out = String::new();
        for (surface, misc) in self.surface_tokens() {
            out.push_str(surface);
            let no_space = misc
                .map(|m| m.split('|').any(|e| e == "SpaceAfter=No"))
                .unwrap_or(false);
            if !no_space {
                out.push(' ');
            }
        }
        out.truncate(out.trim_end().len());
        out
    }

    /// Surface tokens: multiword spans stand in for the words they cover.
    /// Yields `(surface, misc)`.
    pub fn surface_tokens(&self) -> Vec<(&str, Option<&str>)> {
        let mut out = Vec::new();
        let mut id = 1;
        while id <= self.tokens.len() {
            if let Some(span) = self.spans.iter().find(|s| s.start == id) {
                out.push((span.surface.as_str(), span.misc.as_deref()));
                id = span.end + 1;
            } else {
                let tok = self.token(id);
                out.push((tok.form.as_str(), tok.misc.as_deref()));
                id += 1;
            }
        }
        out
    }

    /// Check that the heads form a single tree rooted at 0.
    ///
    /// Returns an empty list iff every head is set and in range, exactly
    /// one token attaches to 0, and there are no cycles.
    pub fn validate_tree(&self) -> Vec<Violation> {
        let n = self.tokens.len();
        let mut violations = Vec::new();
        for tok in &self.tokens {
            match tok.head {
                None => violations.push(Violation::MissingHead(tok.id)),
                Some(h) if h > n => violations.push(Violation::HeadOutOfRange { id: tok.id, head: h }),
                _ => {}
            }
        }
        let roots: Vec<usize> = self
            .tokens
            .iter()
            .filter(|t| t.head == Some(0))
            .map(|t| t.id)
            .collect();
        if n > 0 {
            match roots.len() {
                0 => violations.push(Violation::NoRoot),
                1 => {}
                _ => violations.push(Violation::MultipleRoots(roots)),
            }
        }
        for cycle in find_cycles(&self.head_vector()) {
            violations.push(Violation::Cycle(cycle));
        }
        violations
    }

    /// Heads as a vector indexed by `id - 1`; unset and out-of-range
    /// heads become `None`.
    fn head_vector(&self) -> Vec<Option<usize>> {
        let n = self.tokens.len();
        self.tokens
            .iter()
            .map(|t| t.head.filter(|&h| h <= n))
            .collect()
    }

    /// Reorder tokens: `permutation[k]` is the old id of the token placed at
    /// new position `k + 1`. Heads are rewritten so the tree is unchanged.
    pub fn renumber(&self, permutation: &[usize]) -> Result<AnnotatedSentence, ReorderError> {
        let n = self.tokens.len();
        let mut new_id = vec![0usize; n + 1];
        if permutation.len() != n {
            return Err(ReorderError::NotBijection(n));
        }
        for (pos, &old) in permutation.iter().enumerate() {
            if old == 0 || old > n || new_id[old] != 0 {
                return Err(ReorderError::NotBijection(n));
            }
            new_id[old] = pos + 1;
        }
        let identity = permutation.iter().enumerate().all(|(i, &o)| o == i + 1);
        let tokens = permutation
            .iter()
            .enumerate()
            .map(|(pos, &old)| {
                let mut tok = self.tokens[old - 1].clone();
                tok.id = pos + 1;
                tok.head = tok.head.map(|h| if h == 0 || h > n { h } else { new_id[h] });
                tok
            })
            .collect();
        let mut spans: Vec<MultiwordSpan> = self
            .spans
            .iter()
            .filter_map(|span| {
                let start = new_id[span.start];
                let contiguous = (span.start..=span.end)
                    .enumerate()
                    .all(|(off, old)| new_id[old] == start + off);
                contiguous.then(|| MultiwordSpan {
                    start,
                    end: start + (span.end - span.start),
                    ..span.clone()
                })
            })
            .collect();
        spans.sort_by_key(|s| s.start);
        Ok(AnnotatedSentence {
            tokens,
            spans,
            comments: self.comments.clone(),
            char_offsets: if identity { self.char_offsets.clone() } else { None },
        })
    }

    /// Keep only the given token ids (in their original order) and renumber.
    /// Every kept token's head must be kept too, or be the virtual root.
    pub fn subsentence(&self, keep: &[usize]) -> Result<AnnotatedSentence, ReorderError> {
        let n = self.tokens.len();
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut new_id = vec![0usize; n + 1];
        for (pos, &old) in keep.iter().enumerate() {
            if old == 0 || old > n {
                return Err(ReorderError::OutOfRange(old));
            }
            new_id[old] = pos + 1;
        }
        let mut tokens = Vec::with_capacity(keep.len());
        for &old in &keep {
            let mut tok = self.tokens[old - 1].clone();
            if let Some(h) = tok.head {
                if h != 0 {
                    if h > n || new_id[h] == 0 {
                        return Err(ReorderError::HeadNotKept { id: old, head: h });
                    }
                    tok.head = Some(new_id[h]);
                }
            }
            tok.id = new_id[old];
            tokens.push(tok);
        }
        let spans = self
            .spans
            .iter()
            .filter(|s| (s.start..=s.end).all(|id| new_id[id] != 0))
            .map(|s| MultiwordSpan {
                start: new_id[s.start],
                end: new_id[s.end],
                ..s.clone()
            })
            .collect();
        Ok(AnnotatedSentence {
            tokens,
            spans,
            comments: self.comments.clone(),
            char_offsets: None,
        })
    }

    /// The tree as a sorted multiset of `(head form, dependent form, deprel)`.
    /// The virtual root's form is `ROOT`.
    pub fn triples(&self) -> Vec<(String, String, String)> {
        let mut out: Vec<_> = self
            .tokens
            .iter()
            .map(|t| {
                let head_form = match t.head {
                    Some(0) => "ROOT".to_owned(),
                    Some(h) if h <= self.tokens.len() => self.token(h).form.clone(),
                    _ => "_".to_owned(),
                };
                (head_form, t.form.clone(), t.deprel.clone().unwrap_or_default())
            })
            .collect();
        out.sort();
        out
    }

    /// Copy with every annotation column unset (forms, comments and
    /// multiword spans are kept).
    pub fn stripped(&self) -> AnnotatedSentence {
        AnnotatedSentence {
            tokens: self
                .tokens
                .iter()
                .map(|t| Token {
                    misc: t.misc.clone(),
                    ..Token::new(t.id, t.form.clone())
                })
                .collect(),
            spans: self.spans.clone(),
            comments: self.comments.clone(),
            char_offsets: self.char_offsets.clone(),
        }
    }
}

/// All cycles in a head vector (index = id - 1, value = head id), each as
/// an ascending id list, ordered by smallest member.
pub(crate) fn find_cycles(heads: &[Option<usize>]) -> Vec<Vec<usize>> {
    let n = heads.len();
    // 0 = unvisited, 1 = on current walk, 2 = done
    let mut state = vec![0u8; n + 1];
    let mut cycles = Vec::new();
    for start in 1..=n {
        if state[start] != 0 {
            continue;
        }
        let mut walk = Vec::new();
        let mut node = start;
        loop {
            if node == 0 || state[node] == 2 {
                break;
            }
            if state[node] == 1 {
                let pos = walk.iter().position(|&w| w == node).unwrap();
                let mut cycle: Vec<usize> = walk[pos..].to_vec();
                cycle.sort_unstable();
                cycles.push(cycle);
                break;
            }
            state[node] = 1;
            walk.push(node);
            match heads[node - 1] {
                Some(h) => node = h,
                None => break,
            }
        }
        for w in walk {
            state[w] = 2;
        }
    }
    cycles.sort();
    cycles
}

/// An ordered collection of sentences.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Treebank {
    pub sentences: Vec<AnnotatedSentence>,
    pub source_name: String,
}

impl Treebank {
    pub fn new(source_name: impl Into<String>) -> Self {
        Treebank {
            sentences: Vec::new(),
            source_name: source_name.into(),
        }
    }

    pub fn from_sentences(source_name: impl Into<String>, sentences: Vec<AnnotatedSentence>) -> Self {
        Treebank {
            sentences,
            source_name: source_name.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn word_count(&self) -> usize {
        self.sentences.iter().map(|s| s.len()).sum()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, AnnotatedSentence> {
        self.sentences.iter()
    }

    /// The document text: sentence texts joined by single spaces.
    pub fn raw_text(&self) -> String {
        self.sentences
            .iter()
            .map(|s| s.raw_text())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn donated() -> AnnotatedSentence {
        let forms = ["All", "proceeds", "were", "donated", "to", "local", "frontliners", "."];
        let heads = [2, 4, 4, 0, 7, 7, 4, 4];
        let rels = ["det", "nsubj", "aux", "root", "case", "amod", "obl", "punct"];
        let mut s = AnnotatedSentence::from_forms(&forms);
        for (tok, (h, r)) in s.tokens.iter_mut().zip(heads.iter().zip(rels)) {
            tok.head = Some(*h);
            tok.deprel = Some(r.to_owned());
        }
        s
    }

    fn with_heads(heads: &[usize]) -> AnnotatedSentence {
        let forms: Vec<String> = (1..=heads.len()).map(|i| format!("w{i}")).collect();
        let mut s = AnnotatedSentence::from_forms(&forms);
        for (tok, h) in s.tokens.iter_mut().zip(heads) {
            tok.head = Some(*h);
            tok.deprel = Some("dep".into());
        }
        s
    }

    #[test]
    fn feats_sort_case_insensitively() {
        let feats: Features = [("Number", "Plur"), ("Case", "Nom"), ("aspect", "Perf")]
            .into_iter()
            .collect();
        assert_eq!(feats.to_string(), "aspect=Perf|Case=Nom|Number=Plur");
        assert_eq!(Features::new().to_string(), "_");
    }

    #[test]
    fn feats_reject_duplicates() {
        assert!(Features::parse("Case=Nom|Case=Acc").is_err());
        assert!(Features::parse("Case").is_err());
    }

    #[test]
    fn donated_sentence_is_a_valid_tree() {
        let s = donated();
        assert_eq!(s.validate_tree(), vec![]);
        assert_eq!(s.root(), Some(4));
    }

    #[test]
    fn two_token_cycle_and_double_root() {
        let s = with_heads(&[2, 1]);
        let v = s.validate_tree();
        assert!(v.contains(&Violation::Cycle(vec![1, 2])));
        assert_eq!(Violation::Cycle(vec![1, 2]).to_string(), "cycle at tokens 1,2");

        let s = with_heads(&[0, 0]);
        assert_eq!(s.validate_tree(), vec![Violation::MultipleRoots(vec![1, 2])]);
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let s = with_heads(&[0, 2]);
        assert_eq!(s.validate_tree(), vec![Violation::Cycle(vec![2])]);
    }

    /// Every head vector over n ≤ 4 tokens whose heads form a tree rooted
    /// at 0 validates cleanly, and every other vector does not.
    #[test]
    fn exhaustive_small_trees() {
        fn is_tree(heads: &[usize]) -> bool {
            let n = heads.len();
            if heads.iter().filter(|&&h| h == 0).count() != 1 {
                return false;
            }
            (1..=n).all(|start| {
                let mut node = start;
                for _ in 0..=n {
                    if node == 0 {
                        return true;
                    }
                    node = heads[node - 1];
                }
                false
            })
        }
        for n in 1..=4usize {
            let total = (n + 1).pow(n as u32);
            for code in 0..total {
                let mut c = code;
                let heads: Vec<usize> = (0..n)
                    .map(|_| {
                        let h = c % (n + 1);
                        c /= n + 1;
                        h
                    })
                    .collect();
                let s = with_heads(&heads);
                assert_eq!(s.validate_tree().is_empty(), is_tree(&heads), "{heads:?}");
            }
        }
    }

    #[test]
    fn identity_renumber_is_noop() {
        let s = donated();
        let perm: Vec<usize> = (1..=8).collect();
        assert_eq!(s.renumber(&perm).unwrap(), s);
    }

    #[test]
    fn reversal_keeps_governors() {
        let s = donated();
        let perm: Vec<usize> = (1..=8).rev().collect();
        let r = s.renumber(&perm).unwrap();
        assert_eq!(r.triples(), s.triples());
        assert!(r.validate_tree().is_empty());
        assert_eq!(r.tokens[0].form, ".");
        assert_eq!(r.token(r.tokens[0].head.unwrap()).form, "donated");
    }

    #[test]
    fn chain_reversal_matches_brute_force_triples() {
        // 1 <- 2 <- 3, root 3
        let s = with_heads(&[2, 3, 0]);
        let r = s.renumber(&[3, 2, 1]).unwrap();
        let heads: Vec<_> = r.tokens.iter().map(|t| t.head.unwrap()).collect();
        assert_eq!(heads, vec![0, 1, 2]);
        assert_eq!(r.triples(), s.triples());
    }

    #[test]
    fn renumber_rejects_non_bijection() {
        let s = donated();
        assert!(s.renumber(&[1, 1, 2, 3, 4, 5, 6, 7]).is_err());
        assert!(s.renumber(&[1, 2, 3]).is_err());
        assert!(s.renumber(&[0, 1, 2, 3, 4, 5, 6, 7]).is_err());
    }

    #[test]
    fn subsentence_requires_closed_heads() {
        let s = donated();
        let sub = s.subsentence(&[2, 3, 4, 8]).unwrap();
        assert_eq!(sub.forms(), vec!["proceeds", "were", "donated", "."]);
        assert!(sub.validate_tree().is_empty());
        assert_eq!(
            s.subsentence(&[1, 4]).unwrap_err(),
            ReorderError::HeadNotKept { id: 1, head: 2 }
        );
    }

    #[test]
    fn raw_text_honours_space_after() {
        let mut s = AnnotatedSentence::from_forms(&["Hello", "world", "."]);
        s.tokens[1].misc = Some("SpaceAfter=No".into());
        assert_eq!(s.raw_text(), "Hello world.");
        s.set_comment("text", "Hello  world.");
        assert_eq!(s.raw_text(), "Hello  world.");
    }
}

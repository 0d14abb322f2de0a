//! Arc-factored dependency parser trained as a structured perceptron.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::averaged::Averaged;
use super::LearnError;
use crate::delex::{extract_examples, train_labeler, Labeler};
use crate::project::{decode_single_root, predict_labels_delex, WeightedDigraph};
use crate::treebank::{AnnotatedSentence, Treebank};

const HEADER: &str = "udkit-parser 1";
const LABELER_MARK: &str = "[labeler]";
const LABELER_TREES: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct ParserModel {
    pub weights: BTreeMap<String, f64>,
    pub labeler: Labeler,
}

/// Per-node views used by the feature templates; index 0 is the root.
struct Nodes {
    forms: Vec<String>,
    tags: Vec<String>,
}

impl Nodes {
    fn of(s: &AnnotatedSentence) -> Nodes {
        let mut forms = vec!["<root>".to_owned()];
        let mut tags = vec!["ROOT".to_owned()];
        for t in &s.tokens {
            forms.push(t.form.to_lowercase());
            tags.push(t.upos.map_or_else(|| "_".to_owned(), |u| u.to_string()));
        }
        Nodes { forms, tags }
    }

    fn len(&self) -> usize {
        self.forms.len() - 1
    }
}

fn distance_bin(dist: usize) -> &'static str {
    match dist {
        1 => "1",
        2 => "2",
        3..=5 => "3-5",
        6..=10 => "6-10",
        _ => ">10",
    }
}

fn arc_features(nodes: &Nodes, h: usize, d: usize) -> [String; 5] {
    let (th, td) = (&nodes.tags[h], &nodes.tags[d]);
    let dir = if h < d { "R" } else { "L" };
    [
        format!("pp={th}|{td}"),
        format!("ppd={th}|{td}|{dir}"),
        format!("ppb={th}|{td}|{}", distance_bin(h.abs_diff(d))),
        format!("fp={}|{td}", nodes.forms[h]),
        format!("pf={th}|{}", nodes.forms[d]),
    ]
}

/// Score every candidate arc, decode the best single-rooted tree.
/// Scores are shifted to be non-negative first; every tree has exactly
/// `n` arcs, so the shift does not change which tree wins.
fn decode<F: Fn(&str) -> f64>(nodes: &Nodes, weight: F) -> Vec<usize> {
    let n = nodes.len();
    let mut scores = Vec::with_capacity(n * n);
    for h in 0..=n {
        for d in 1..=n {
            if h != d {
                let s: f64 = arc_features(nodes, h, d).iter().map(|f| weight(f)).sum();
                scores.push((h, d, s));
            }
        }
    }
    let min = scores.iter().map(|a| a.2).fold(f64::INFINITY, f64::min);
    let mut g = WeightedDigraph::new(n);
    for (h, d, s) in scores {
        g.add(h, d, s - min + 1.0);
    }
    decode_single_root(&g).expect("sentence has at least one token")
}

fn gold_heads(s: &AnnotatedSentence, idx: usize) -> Result<Vec<usize>, LearnError> {
    let bad = |message: String| LearnError::BadSentence { sentence: idx + 1, message };
    if let Some(v) = s.validate_tree().first() {
        return Err(bad(v.to_string()));
    }
    s.tokens
        .iter()
        .map(|t| t.head.ok_or_else(|| bad(format!("token {} has no head", t.id))))
        .collect()
}

pub fn train_parser(tb: &Treebank, epochs: usize, seed: u64) -> Result<ParserModel, LearnError> {
    if tb.is_empty() {
        return Err(LearnError::EmptyTreebank);
    }
    let mut data = Vec::with_capacity(tb.len());
    for (idx, s) in tb.iter().enumerate() {
        if s.is_empty() {
            continue;
        }
        data.push((Nodes::of(s), gold_heads(s, idx)?));
    }
    let labeler = train_labeler(&extract_examples(tb)?, LABELER_TREES, seed)?;

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Averaged<String> = Averaged::new();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let (nodes, gold) = &data[idx];
            let guess = decode(nodes, |f| w.get(&f.to_owned()));
            if &guess != gold {
                for (i, (&g, &p)) in gold.iter().zip(&guess).enumerate() {
                    if g != p {
                        for f in arc_features(nodes, g, i + 1) {
                            w.update(&f, 1.0);
                        }
                        for f in arc_features(nodes, p, i + 1) {
                            w.update(&f, -1.0);
                        }
                    }
                }
            }
            w.tick();
        }
    }
    Ok(ParserModel { weights: w.finish().collect(), labeler })
}

impl ParserModel {
    pub fn predict_heads(&self, s: &AnnotatedSentence) -> Vec<usize> {
        if s.is_empty() {
            return Vec::new();
        }
        decode(&Nodes::of(s), |f| self.weights.get(f).copied().unwrap_or(0.0))
    }

    /// Weights, then the embedded labeler after a marker line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\n");
        for (f, v) in &self.weights {
            let _ = writeln!(out, "{f}\t{v}");
        }
        out.push_str(LABELER_MARK);
        out.push('\n');
        out.push_str(&self.labeler.to_text());
        out
    }

    pub fn from_text(text: &str) -> Result<ParserModel, LearnError> {
        let err = |line: usize, message: String| LearnError::Format { line, message };
        let mut lines = text.lines().enumerate();
        if lines.next().map(|l| l.1) != Some(HEADER) {
            return Err(err(1, format!("expected header {HEADER:?}")));
        }
        let mut weights = BTreeMap::new();
        let mut labeler_start = None;
        for (idx, line) in lines {
            if line == LABELER_MARK {
                labeler_start = Some(idx + 1);
                break;
            }
            let (f, v) = line.rsplit_once('\t').ok_or_else(|| err(idx + 1, "expected feature and weight".into()))?;
            let v: f64 = v.parse().map_err(|_| err(idx + 1, format!("bad weight {v:?}")))?;
            weights.insert(f.to_owned(), v);
        }
        let start = labeler_start.ok_or_else(|| err(text.lines().count(), "missing labeler section".into()))?;
        let rest: Vec<&str> = text.lines().skip(start).collect();
        let labeler = Labeler::from_text(&(rest.join("\n") + "\n"))?;
        Ok(ParserModel { weights, labeler })
    }
}

/// A copy of `s` with heads from the parser and labels from the labeler.
pub fn parse(s: &AnnotatedSentence, m: &ParserModel) -> AnnotatedSentence {
    let heads = m.predict_heads(s);
    let upos: Vec<_> = s.tokens.iter().map(|t| t.upos).collect();
    let labels = predict_labels_delex(&heads, &upos, &m.labeler);
    let mut out = s.clone();
    for ((tok, h), l) in out.tokens.iter_mut().zip(heads).zip(labels) {
        tok.head = Some(h);
        tok.deprel = Some(l);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::upos::Upos;

    fn tree(rows: &[(&str, Upos, usize, &str)]) -> AnnotatedSentence {
        let forms: Vec<&str> = rows.iter().map(|r| r.0).collect();
        let mut s = AnnotatedSentence::from_forms(&forms);
        for (tok, r) in s.tokens.iter_mut().zip(rows) {
            tok.upos = Some(r.1);
            tok.head = Some(r.2);
            tok.deprel = Some(r.3.to_owned());
        }
        s
    }

    fn four() -> AnnotatedSentence {
        tree(&[
            ("the", Upos::Det, 2, "det"),
            ("dog", Upos::Noun, 3, "nsubj"),
            ("barks", Upos::Verb, 0, "root"),
            (".", Upos::Punct, 3, "punct"),
        ])
    }

    #[test]
    fn memorises_a_repeated_tree() {
        let s = four();
        let tb = Treebank::from_sentences("t", vec![s.clone(); 50]);
        let m = train_parser(&tb, 10, 4).unwrap();
        let mut bare = s.clone();
        for t in &mut bare.tokens {
            t.head = None;
            t.deprel = None;
        }
        let out = parse(&bare, &m);
        assert_eq!(out.tokens.iter().map(|t| t.head).collect::<Vec<_>>(), s.tokens.iter().map(|t| t.head).collect::<Vec<_>>());
        assert_eq!(out.triples(), s.triples());
    }

    #[test]
    fn output_is_always_a_tree() {
        let tb = Treebank::from_sentences("t", vec![four(); 3]);
        let m = train_parser(&tb, 2, 0).unwrap();
        for n in 1..8 {
            let forms: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
            let out = parse(&AnnotatedSentence::from_forms(&forms), &m);
            assert!(out.validate_tree().is_empty(), "n = {n}");
        }
    }

    #[test]
    fn errors_and_round_trip() {
        assert_eq!(train_parser(&Treebank::new("e"), 3, 0).unwrap_err(), LearnError::EmptyTreebank);
        let tb = Treebank::from_sentences("t", vec![four(); 5]);
        let m = train_parser(&tb, 3, 2).unwrap();
        let text = m.to_text();
        assert_eq!(ParserModel::from_text(&text).unwrap(), m);
        assert_eq!(train_parser(&tb, 3, 2).unwrap().to_text(), text);
        let mut broken = four();
        broken.tokens[0].head = None;
        assert!(matches!(
            train_parser(&Treebank::from_sentences("b", vec![broken]), 1, 0),
            Err(LearnError::BadSentence { sentence: 1, .. })
        ));
    }
}

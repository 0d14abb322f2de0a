//! Delexicalized dependency-label prediction from two features: the
//! dependent's UPOS and its head's UPOS (or the virtual root).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::treebank::Treebank;
use crate::upos::Upos;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DelexError {
    #[error("sentence {sentence}, token {token}: {what} missing")]
    Missing { sentence: usize, token: usize, what: &'static str },
    #[error("no training examples")]
    NoExamples,
    #[error("the forest needs at least one tree")]
    NoTrees,
    #[error("labeler file line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Head feature: a tag, or the virtual root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HeadTag {
    Root,
    Tag(Upos),
}

impl fmt::Display for HeadTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeadTag::Root => f.write_str("ROOT"),
            HeadTag::Tag(t) => write!(f, "{t}"),
        }
    }
}

impl FromStr for HeadTag {
    type Err = crate::upos::UnknownTag;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ROOT" {
            Ok(HeadTag::Root)
        } else {
            s.parse().map(HeadTag::Tag)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelExample {
    pub dep_upos: Upos,
    pub head_upos: HeadTag,
    pub label: String,
}

/// One example per token. Root tokens give `(tag, ROOT, "root")`; other
/// labels are taken as written (subtypes included).
pub fn extract_examples(tb: &Treebank) -> Result<Vec<LabelExample>, DelexError> {
    let mut out = Vec::new();
    for (si, s) in tb.sentences.iter().enumerate() {
        for tok in &s.tokens {
            let missing = |what| DelexError::Missing { sentence: si + 1, token: tok.id, what };
            let dep_upos = tok.upos.ok_or_else(|| missing("upos"))?;
            let head = tok.head.ok_or_else(|| missing("head"))?;
            let (head_upos, label) = if head == 0 {
                (HeadTag::Root, "root".to_owned())
            } else {
                let head_tok = s.tokens.get(head - 1).ok_or_else(|| missing("head token"))?;
                let tag = head_tok.upos.ok_or_else(|| missing("head upos"))?;
                (HeadTag::Tag(tag), tok.deprel.clone().ok_or_else(|| missing("deprel"))?)
            };
            out.push(LabelExample { dep_upos, head_upos, label });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Feature {
    Dep,
    Head,
}

impl Feature {
    fn value(self, dep: Upos, head: HeadTag) -> String {
        match self {
            Feature::Dep => dep.to_string(),
            Feature::Head => head.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Node {
    Leaf(String),
    Split {
        feature: Feature,
        /// Used when the branch value was absent from this tree's sample.
        majority: String,
        children: BTreeMap<String, Node>,
    },
}

impl Node {
    fn predict(&self, dep: Upos, head: HeadTag) -> &str {
        match self {
            Node::Leaf(label) => label,
            Node::Split { feature, majority, children } => children
                .get(&feature.value(dep, head))
                .map(|child| child.predict(dep, head))
                .unwrap_or(majority),
        }
    }
}

/// Forest settings. `bootstrap` and `subsample_features` exist so tests can
/// turn the randomness off; both default to on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ForestOptions {
    pub n_trees: usize,
    pub seed: u64,
    pub bootstrap: bool,
    pub subsample_features: bool,
}

impl Default for ForestOptions {
    fn default() -> Self {
        ForestOptions { n_trees: 50, seed: 0, bootstrap: true, subsample_features: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labeler {
    trees: Vec<Node>,
    pub fallback_label: String,
    /// Training-set label counts, used to break vote ties.
    frequencies: BTreeMap<String, usize>,
    seen: BTreeSet<(Upos, HeadTag)>,
}

pub fn train_labeler(examples: &[LabelExample], n_trees: usize, seed: u64) -> Result<Labeler, DelexError> {
    train_labeler_with(examples, ForestOptions { n_trees, seed, ..Default::default() })
}

pub fn train_labeler_with(examples: &[LabelExample], opts: ForestOptions) -> Result<Labeler, DelexError> {
    if opts.n_trees == 0 {
        return Err(DelexError::NoTrees);
    }
    if examples.is_empty() {
        return Err(DelexError::NoExamples);
    }
    let mut frequencies = BTreeMap::new();
    for ex in examples {
        *frequencies.entry(ex.label.clone()).or_insert(0) += 1;
    }
    let fallback_label = pick(&frequencies, &frequencies);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let trees = (0..opts.n_trees)
        .map(|_| {
            let sample: Vec<&LabelExample> = if opts.bootstrap {
                (0..examples.len()).map(|_| &examples[rng.gen_range(0..examples.len())]).collect()
            } else {
                examples.iter().collect()
            };
            grow(&sample, &frequencies, opts.subsample_features, &mut rng)
        })
        .collect();
    Ok(Labeler {
        trees,
        fallback_label,
        frequencies,
        seen: examples.iter().map(|e| (e.dep_upos, e.head_upos)).collect(),
    })
}

/// Most common label in `counts`; ties go to the globally more frequent
/// label, then to the alphabetically first.
fn pick(counts: &BTreeMap<String, usize>, global: &BTreeMap<String, usize>) -> String {
    counts
        .iter()
        .max_by(|(la, ca), (lb, cb)| {
            ca.cmp(cb)
                .then_with(|| global.get(*la).cmp(&global.get(*lb)))
                .then_with(|| lb.cmp(la))
        })
        .map(|(l, _)| l.clone())
        .unwrap_or_default()
}

fn label_counts(sample: &[&LabelExample]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for ex in sample {
        *counts.entry(ex.label.clone()).or_insert(0) += 1;
    }
    counts
}

fn gini(counts: &BTreeMap<String, usize>) -> f64 {
    let total: usize = counts.values().sum();
    if total == 0 {
        return 0.0;
    }
    1.0 - counts
        .values()
        .map(|&c| (c as f64 / total as f64).powi(2))
        .sum::<f64>()
}

fn partition<'a>(sample: &[&'a LabelExample], feature: Feature) -> BTreeMap<String, Vec<&'a LabelExample>> {
    let mut parts: BTreeMap<String, Vec<&LabelExample>> = BTreeMap::new();
    for ex in sample {
        parts.entry(feature.value(ex.dep_upos, ex.head_upos)).or_default().push(ex);
    }
    parts
}

fn weighted_gini(parts: &BTreeMap<String, Vec<&LabelExample>>, total: usize) -> f64 {
    parts
        .values()
        .map(|p| p.len() as f64 / total as f64 * gini(&label_counts(p)))
        .sum()
}

fn grow(
    sample: &[&LabelExample],
    global: &BTreeMap<String, usize>,
    subsample: bool,
    rng: &mut ChaCha8Rng,
) -> Node {
    let counts = label_counts(sample);
    let majority = pick(&counts, global);
    if counts.len() <= 1 {
        return Node::Leaf(majority);
    }
    let splittable = |f: Feature| partition(sample, f).len() > 1;
    let candidates: Vec<Feature> = if subsample {
        let first = if rng.gen_bool(0.5) { Feature::Dep } else { Feature::Head };
        let other = if first == Feature::Dep { Feature::Head } else { Feature::Dep };
        // Fall back to the other feature when the drawn one cannot split.
        if splittable(first) { vec![first] } else { vec![other] }
    } else {
        vec![Feature::Dep, Feature::Head]
    };
    let best = candidates
        .into_iter()
        .filter(|&f| splittable(f))
        .map(|f| (weighted_gini(&partition(sample, f), sample.len()), f))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let Some((_, feature)) = best else {
        return Node::Leaf(majority);
    };
    let children = partition(sample, feature)
        .into_iter()
        .map(|(value, part)| (value, grow(&part, global, subsample, rng)))
        .collect();
    Node::Split { feature, majority, children }
}

impl Labeler {
    /// Majority vote over the trees; pairs never seen in training get the
    /// fallback label.
    pub fn predict(&self, dep: Upos, head: HeadTag) -> String {
        if !self.seen.contains(&(dep, head)) {
            return self.fallback_label.clone();
        }
        let mut votes = BTreeMap::new();
        for tree in &self.trees {
            *votes.entry(tree.predict(dep, head).to_owned()).or_insert(0) += 1;
        }
        pick(&votes, &self.frequencies)
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("udkit-labeler 1\n");
        let _ = writeln!(out, "fallback {}", self.fallback_label);
        for (label, count) in &self.frequencies {
            let _ = writeln!(out, "freq {label} {count}");
        }
        for (dep, head) in &self.seen {
            let _ = writeln!(out, "seen {dep} {head}");
        }
        for tree in &self.trees {
            out.push_str("tree\n");
            write_node(tree, &mut out);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Labeler, DelexError> {
        let mut lines = text.lines().enumerate().peekable();
        let fail = |line: usize, message: &str| DelexError::Format { line, message: message.to_owned() };
        if lines.next().map(|(_, l)| l) != Some("udkit-labeler 1") {
            return Err(fail(1, "expected header \"udkit-labeler 1\""));
        }
        let mut labeler = Labeler {
            trees: Vec::new(),
            fallback_label: String::new(),
            frequencies: BTreeMap::new(),
            seen: BTreeSet::new(),
        };
        while let Some((idx, line)) = lines.next() {
            let parts: Vec<&str> = line.split(' ').collect();
            match parts.as_slice() {
                ["fallback", label] => labeler.fallback_label = (*label).to_owned(),
                ["freq", label, count] => {
                    let count = count.parse().map_err(|_| fail(idx + 1, "bad count"))?;
                    labeler.frequencies.insert((*label).to_owned(), count);
                }
                ["seen", dep, head] => {
                    let dep = dep.parse().map_err(|_| fail(idx + 1, "bad tag"))?;
                    let head = head.parse().map_err(|_| fail(idx + 1, "bad tag"))?;
                    labeler.seen.insert((dep, head));
                }
                ["tree"] => labeler.trees.push(read_node(&mut lines)?),
                _ => return Err(fail(idx + 1, "unrecognised line")),
            }
        }
        if labeler.trees.is_empty() {
            return Err(DelexError::NoTrees);
        }
        Ok(labeler)
    }
}

fn write_node(node: &Node, out: &mut String) {
    match node {
        Node::Leaf(label) => {
            let _ = writeln!(out, "leaf {label}");
        }
        Node::Split { feature, majority, children } => {
            let name = if *feature == Feature::Dep { "dep" } else { "head" };
            let _ = writeln!(out, "split {name} {majority} {}", children.len());
            for (value, child) in children {
                let _ = writeln!(out, "branch {value}");
                write_node(child, out);
            }
        }
    }
}

fn read_node<'a, I>(lines: &mut std::iter::Peekable<I>) -> Result<Node, DelexError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let (idx, line) = lines
        .next()
        .ok_or(DelexError::Format { line: 0, message: "truncated tree".into() })?;
    let fail = |message: &str| DelexError::Format { line: idx + 1, message: message.to_owned() };
    let parts: Vec<&str> = line.split(' ').collect();
    match parts.as_slice() {
        ["leaf", label] => Ok(Node::Leaf((*label).to_owned())),
        ["split", name, majority, n] => {
            let feature = match *name {
                "dep" => Feature::Dep,
                "head" => Feature::Head,
                _ => return Err(fail("bad split feature")),
            };
            let n: usize = n.parse().map_err(|_| fail("bad branch count"))?;
            let mut children = BTreeMap::new();
            for _ in 0..n {
                let (bidx, branch) = lines.next().ok_or_else(|| fail("truncated split"))?;
                let value = branch.strip_prefix("branch ").ok_or(DelexError::Format {
                    line: bidx + 1,
                    message: "expected branch".into(),
                })?;
                children.insert(value.to_owned(), read_node(lines)?);
            }
            Ok(Node::Split { feature, majority: (*majority).to_owned(), children })
        }
        _ => Err(fail("expected leaf or split")),
    }
}

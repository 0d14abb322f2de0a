//! Greedy left-to-right averaged perceptron POS tagger.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::averaged::Averaged;
use super::LearnError;
use crate::treebank::{AnnotatedSentence, Treebank};
use crate::upos::Upos;

const HEADER: &str = "udkit-tagger 1";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TaggerModel {
    /// feature -> tag -> averaged weight
    pub weights: BTreeMap<String, BTreeMap<Upos, f64>>,
    /// Tags seen in training, in canonical order.
    pub tagset: Vec<Upos>,
}

fn features(forms: &[String], i: usize, prev: Option<Upos>) -> Vec<String> {
    let w = &forms[i];
    let chars: Vec<char> = w.chars().collect();
    let mut f = vec!["bias".to_owned(), format!("w={w}")];
    for len in 1..=3.min(chars.len()) {
        f.push(format!("p{len}={}", chars[..len].iter().collect::<String>()));
        f.push(format!("s{len}={}", chars[chars.len() - len..].iter().collect::<String>()));
    }
    if chars.iter().any(|c| c.is_numeric()) {
        f.push("digit".to_owned());
    }
    if w.contains('-') {
        f.push("hyphen".to_owned());
    }
    f.push(format!("t-1={}", prev.map_or("<S>", Upos::as_str)));
    f.push(format!("w-1={}", if i == 0 { "<S>" } else { forms[i - 1].as_str() }));
    f.push(format!("w+1={}", forms.get(i + 1).map_or("</S>", String::as_str)));
    f
}

fn lowered(s: &AnnotatedSentence) -> Vec<String> {
    s.tokens.iter().map(|t| t.form.to_lowercase()).collect()
}

/// Highest scoring tag; ties go to the earlier tag in canonical order.
fn best<F: Fn(&str, Upos) -> f64>(tagset: &[Upos], feats: &[String], weight: F) -> Upos {
    let mut best = (tagset[0], f64::NEG_INFINITY);
    for &tag in tagset {
        let score: f64 = feats.iter().map(|f| weight(f, tag)).sum();
        if score > best.1 {
            best = (tag, score);
        }
    }
    best.0
}

/// Train on every token that has a UPOS tag; untagged tokens are still
/// predicted (so the next token sees a previous tag) but never updated.
pub fn train_tagger(tb: &Treebank, epochs: usize, seed: u64) -> Result<TaggerModel, LearnError> {
    if tb.is_empty() {
        return Err(LearnError::EmptyTreebank);
    }
    let tagset: Vec<Upos> = tb
        .iter()
        .flat_map(|s| s.tokens.iter().filter_map(|t| t.upos))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if tagset.is_empty() {
        return Err(LearnError::NoTaggedTokens);
    }
    let data: Vec<(Vec<String>, Vec<Option<Upos>>)> = tb
        .iter()
        .map(|s| (lowered(s), s.tokens.iter().map(|t| t.upos).collect()))
        .collect();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Averaged<(String, Upos)> = Averaged::new();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let (forms, gold) = &data[idx];
            let mut prev = None;
            for i in 0..forms.len() {
                let feats = features(forms, i, prev);
                let guess = best(&tagset, &feats, |f, t| w.get(&(f.to_owned(), t)));
                if let Some(truth) = gold[i] {
                    if truth != guess {
                        for f in &feats {
                            w.update(&(f.clone(), truth), 1.0);
                            w.update(&(f.clone(), guess), -1.0);
                        }
                    }
                    w.tick();
                }
                prev = Some(guess);
            }
        }
    }
    let mut weights: BTreeMap<String, BTreeMap<Upos, f64>> = BTreeMap::new();
    for ((feat, tag), v) in w.finish() {
        weights.entry(feat).or_default().insert(tag, v);
    }
    Ok(TaggerModel { weights, tagset })
}

impl TaggerModel {
    fn weight(&self, feat: &str, tag: Upos) -> f64 {
        self.weights.get(feat).and_then(|row| row.get(&tag)).copied().unwrap_or(0.0)
    }

    pub fn predict(&self, s: &AnnotatedSentence) -> Vec<Upos> {
        let forms = lowered(s);
        let mut prev = None;
        let mut out = Vec::with_capacity(forms.len());
        for i in 0..forms.len() {
            let tag = best(&self.tagset, &features(&forms, i, prev), |f, t| self.weight(f, t));
            out.push(tag);
            prev = Some(tag);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\ntags");
        for t in &self.tagset {
            let _ = write!(out, " {t}");
        }
        out.push('\n');
        for (feat, row) in &self.weights {
            for (tag, v) in row {
                let _ = writeln!(out, "{feat}\t{tag}\t{v}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<TaggerModel, LearnError> {
        let err = |line: usize, message: String| LearnError::Format { line, message };
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(err(1, format!("expected header {HEADER:?}")));
        }
        let tags = lines
            .next()
            .and_then(|l| l.strip_prefix("tags"))
            .ok_or_else(|| err(2, "expected tag list".into()))?;
        let tagset = tags
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(2, format!("unknown tag {t:?}"))))
            .collect::<Result<Vec<Upos>, _>>()?;
        if tagset.is_empty() {
            return Err(err(2, "empty tag list".into()));
        }
        let mut weights: BTreeMap<String, BTreeMap<Upos, f64>> = BTreeMap::new();
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 3;
            let mut parts = line.rsplitn(3, '\t');
            let (Some(v), Some(tag), Some(feat)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err(lineno, "expected feature, tag and weight".into()));
            };
            let tag: Upos = tag.parse().map_err(|_| err(lineno, format!("unknown tag {tag:?}")))?;
            let v: f64 = v.parse().map_err(|_| err(lineno, format!("bad weight {v:?}")))?;
            weights.entry(feat.to_owned()).or_default().insert(tag, v);
        }
        Ok(TaggerModel { weights, tagset })
    }
}

/// A copy of `s` with every token's UPOS set by the model.
pub fn tag(s: &AnnotatedSentence, m: &TaggerModel) -> AnnotatedSentence {
    let mut out = s.clone();
    for (tok, t) in out.tokens.iter_mut().zip(m.predict(s)) {
        tok.upos = Some(t);
    }
    out
}

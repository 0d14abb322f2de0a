//! Rule-based morphological analysis with finite-state transducers.
//!
//! Rules are written in a small line-oriented language (see [`rules`]),
//! compiled into a generation transducer from lemma plus rule tags to
//! surface form, and inverted for analysis. Two starter packs are bundled:
//! [`STARTER_V1`] covers the infixes -um- and -in- and CV reduplication,
//! and [`STARTER_V2`] adds the prefix nag- and the suffix -hin/-in. The
//! features they emit are placeholders, not a linguistic claim.

mod compile;
pub mod fst;
pub mod rules;
mod serial;

use std::collections::BTreeSet;

use crate::treebank::{AnnotatedSentence, Features};

pub use fst::{CharClass, Fst, Label, Sym};
pub use rules::{parse_rules, MorphRule, Pattern, RuleError, RuleSet};
pub use serial::{read_transducer, write_transducer, FstFormatError};

pub const STARTER_V1: &str = include_str!("../../data/v1.rules");
pub const STARTER_V2: &str = include_str!("../../data/v2.rules");

/// A compiled rule set: the generation transducer, its inverse, and the
/// rule metadata needed to turn tag symbols back into analyses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transducer {
    pub rules: RuleSet,
    pub generator: Fst,
    analyzer: Fst,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Analysis {
    pub lemma: String,
    pub feats: Features,
    /// Names of the applied rules, innermost first.
    pub rule_trace: Vec<String>,
}

pub fn compile_rules(text: &str) -> Result<Transducer, RuleError> {
    let rules = parse_rules(text)?;
    let generator = compile::build_generator(&rules);
    Ok(Transducer::from_parts(rules, generator))
}

impl Transducer {
    pub(crate) fn from_parts(rules: RuleSet, generator: Fst) -> Self {
        let analyzer = generator.invert();
        Transducer { rules, generator, analyzer }
    }

    pub fn version_tag(&self) -> &str {
        &self.rules.version_tag
    }

    /// Surface forms for `lemma` with the named rules applied in order.
    /// Unknown rule names yield nothing.
    pub fn generate(&self, lemma: &str, trace: &[&str]) -> Vec<String> {
        let mut input = fst::chars(&lemma.to_lowercase());
        for name in trace {
            match self.rules.rule_index(name) {
                Some(idx) => input.push(Sym::Tag(idx as u16)),
                None => return Vec::new(),
            }
        }
        let forms: BTreeSet<String> = self
            .generator
            .apply(&input)
            .into_iter()
            .filter_map(|out| {
                out.into_iter()
                    .map(|s| match s {
                        Sym::Char(c) => Some(c),
                        _ => None,
                    })
                    .collect::<Option<String>>()
            })
            .collect();
        forms.into_iter().collect()
    }

    fn indexed_analyses(&self, word: &str) -> Vec<(Vec<usize>, Analysis)> {
        let input = fst::chars(&word.to_lowercase());
        let mut seen = BTreeSet::new();
        for out in self.analyzer.apply(&input) {
            let mut lemma = String::new();
            let mut trace = Vec::new();
            let mut well_formed = true;
            for sym in out {
                match sym {
                    Sym::Char(c) if trace.is_empty() => lemma.push(c),
                    Sym::Tag(t) => trace.push(t as usize),
                    _ => well_formed = false,
                }
            }
            if well_formed {
                seen.insert((trace, lemma));
            }
        }
        seen.into_iter()
            .map(|(trace, lemma)| {
                let analysis = Analysis {
                    lemma,
                    feats: self.rules.features_for(&trace),
                    rule_trace: trace.iter().map(|&r| self.rules.rules[r].name.clone()).collect(),
                };
                (trace, analysis)
            })
            .collect()
    }

    fn rule_order(&self, analysis: &Analysis) -> Vec<usize> {
        analysis
            .rule_trace
            .iter()
            .map(|n| self.rules.rule_index(n).unwrap_or(usize::MAX))
            .collect()
    }
}

/// Every analysis whose generation reproduces `word` (lowercased), ordered
/// by rule-file order of the trace and then by lemma.
pub fn analyze(word: &str, t: &Transducer) -> Vec<Analysis> {
    t.indexed_analyses(word).into_iter().map(|(_, a)| a).collect()
}

/// Pick one analysis: the longest rule trace wins, ties go to the trace
/// whose rules come first in the rule file, then to the alphabetically
/// first lemma. With no candidates the lowercased word is its own lemma.
pub fn disambiguate(cands: &[Analysis], word: &str, t: &Transducer) -> Analysis {
    cands
        .iter()
        .min_by(|a, b| {
            b.rule_trace
                .len()
                .cmp(&a.rule_trace.len())
                .then_with(|| t.rule_order(a).cmp(&t.rule_order(b)))
                .then_with(|| a.lemma.cmp(&b.lemma))
        })
        .cloned()
        .unwrap_or_else(|| Analysis {
            lemma: word.to_lowercase(),
            feats: Features::new(),
            rule_trace: Vec::new(),
        })
}

/// Fill lemma and feats of every token. With `gate_by_upos`, an analysis
/// using a rule restricted to some UPOS is only considered for tokens that
/// carry that tag.
pub fn annotate_sentence(s: &AnnotatedSentence, t: &Transducer, gate_by_upos: bool) -> AnnotatedSentence {
    let mut out = s.clone();
    for tok in &mut out.tokens {
        let cands: Vec<Analysis> = t
            .indexed_analyses(&tok.form)
            .into_iter()
            .filter(|(trace, _)| {
                !gate_by_upos
                    || trace.iter().all(|&r| match t.rules.rules[r].applies_to {
                        None => true,
                        Some(tag) => tok.upos == Some(tag),
                    })
            })
            .map(|(_, a)| a)
            .collect();
        let chosen = disambiguate(&cands, &tok.form, t);
        tok.lemma = Some(chosen.lemma);
        tok.feats = chosen.feats;
    }
    out
}

//! Building the generation transducer from a rule set.
//!
//! Generation reads a lemma followed by one tag symbol per applied rule and
//! writes the surface form. For a licensed sequence `r1 … rk` the relation
//! is `stems ∘ R(r1) ∘ … ∘ R(rk)`, where the stem filter copies the lemma
//! and the exact tag sequence, and each `R(ri)` rewrites the characters,
//! deletes its own tag and copies any tags that follow.

use super::fst::{CharClass, Fst, Label, Sym};
use super::rules::{Pattern, RuleSet, SuffixContext};

/// Consonants used to spell out reduplicated syllables.
const REDUP_CONSONANTS: &str = "bcdfghjklmnpqrstvwxyzñ";

pub(crate) fn build_generator(set: &RuleSet) -> Fst {
    let mut parts = Vec::new();
    if set.lexicon.is_some() {
        // Known lemmas also stand on their own, uninflected.
        parts.push(stem_filter(set, &[]));
    }
    for seq in set.licensed_sequences() {
        let mut fst = stem_filter(set, &seq);
        for &r in &seq {
            fst = fst.compose(&rule_fst(set, r));
        }
        parts.push(fst);
    }
    Fst::union(&parts).trim()
}

/// Copies an admissible lemma followed by the tags of `seq`.
fn stem_filter(set: &RuleSet, seq: &[usize]) -> Fst {
    let mut f = Fst::new();
    let end = match &set.lexicon {
        Some(lexicon) => {
            let end = f.add_state();
            for lemma in lexicon {
                let chars: Vec<char> = lemma.chars().collect();
                let mut state = 0;
                for (i, &c) in chars.iter().enumerate() {
                    let label = Label::Pair(Sym::Char(c), Sym::Char(c));
                    if i + 1 == chars.len() {
                        if !f.arcs[state].iter().any(|a| a.label == label && a.to == end) {
                            f.add_arc(state, label, end);
                        }
                        break;
                    }
                    // Reuse an existing non-terminal branch (trie sharing).
                    let existing = f.arcs[state]
                        .iter()
                        .find(|a| a.label == label && a.to != end)
                        .map(|a| a.to);
                    state = match existing {
                        Some(next) => next,
                        None => {
                            let next = f.add_state();
                            f.add_arc(state, label, next);
                            next
                        }
                    };
                }
            }
            end
        }
        None => {
            // Free stems: any string of at least two characters.
            let a = f.add_state();
            let b = f.add_state();
            f.add_arc(0, Label::Ident(CharClass::All), a);
            f.add_arc(a, Label::Ident(CharClass::All), b);
            f.add_arc(b, Label::Ident(CharClass::All), b);
            b
        }
    };
    let last = seq.iter().fold(end, |state, &r| {
        let next = f.add_state();
        let tag = Sym::Tag(r as u16);
        f.add_arc(state, Label::Pair(tag, tag), next);
        next
    });
    f.set_final(last);
    f.trim()
}

fn rule_fst(set: &RuleSet, rule: usize) -> Fst {
    let mut f = Fst::new();
    let body_end = match &set.rules[rule].pattern {
        Pattern::Prefix(p) => {
            let s = f.insert_chain(0, p);
            f.add_arc(s, Label::Ident(CharClass::All), s);
            s
        }
        Pattern::Suffix(s, context) => {
            f.add_arc(0, Label::Ident(CharClass::All), 0);
            let before = match context {
                SuffixContext::Any => 0,
                SuffixContext::AfterVowel | SuffixContext::AfterConsonant => {
                    let class = if *context == SuffixContext::AfterVowel {
                        CharClass::Vowel
                    } else {
                        CharClass::Consonant
                    };
                    let q = f.add_state();
                    f.add_arc(0, Label::Ident(class), q);
                    q
                }
            };
            f.insert_chain(before, s)
        }
        Pattern::Infix(i) => {
            f.add_arc(0, Label::Ident(CharClass::Consonant), 0);
            let inserted = f.insert_chain(0, i);
            let rest = f.add_state();
            f.add_arc(inserted, Label::Ident(CharClass::Vowel), rest);
            f.add_arc(rest, Label::Ident(CharClass::All), rest);
            rest
        }
        Pattern::RedupCv => {
            let rest = f.add_state();
            f.add_arc(rest, Label::Ident(CharClass::All), rest);
            for v in super::fst::VOWELS.chars() {
                let copy = f.insert_chain(0, &v.to_string());
                f.add_arc(copy, Label::Pair(Sym::Char(v), Sym::Char(v)), rest);
            }
            for c in REDUP_CONSONANTS.chars() {
                for v in super::fst::VOWELS.chars() {
                    let copy = f.insert_chain(0, &format!("{c}{v}"));
                    let mid = f.add_state();
                    f.add_arc(copy, Label::Pair(Sym::Char(c), Sym::Char(c)), mid);
                    f.add_arc(mid, Label::Pair(Sym::Char(v), Sym::Char(v)), rest);
                }
            }
            rest
        }
    };
    let done = f.add_state();
    f.add_arc(body_end, Label::Pair(Sym::Tag(rule as u16), Sym::Eps), done);
    for t in 0..set.rules.len() {
        let tag = Sym::Tag(t as u16);
        f.add_arc(done, Label::Pair(tag, tag), done);
    }
    f.set_final(done);
    f
}

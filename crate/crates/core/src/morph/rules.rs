//! The line-oriented rule language.
//!
//! ```text
//! VERSION v1
//! LEXICON basa bili luto
//! infix-um: INFIX um AFTER_ONSET EMIT Aspect=Perf Voice=Act POS VERB
//! PREFIX nag EMIT Voice=Act
//! SUFFIX hin AFTER_VOWEL
//! REDUP CV EMIT Aspect=Prosp
//! COMPOSE redup-cv infix-um EMIT Aspect=Imp
//! ```
//!
//! A rule without a `name:` prefix is named after its kind and pattern
//! (`infix-um`, `prefix-nag`, `suffix-hin`, `redup-cv`). `COMPOSE a b`
//! licenses applying `b` to the output of `a`; its optional `EMIT`
//! overrides the features of the combined analysis. `#` starts a comment.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::treebank::Features;
use crate::upos::Upos;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("rule file line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("rule composition cycle through {0}; rules could apply without bound")]
    Cycle(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuffixContext {
    Any,
    AfterVowel,
    AfterConsonant,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    Prefix(String),
    Suffix(String, SuffixContext),
    /// Inserted after the maximal initial consonant cluster.
    Infix(String),
    /// Copy of the first consonant-vowel (or lone initial vowel) syllable.
    RedupCv,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorphRule {
    pub name: String,
    pub pattern: Pattern,
    pub emit: Features,
    pub applies_to: Option<Upos>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Composition {
    pub first: usize,
    pub second: usize,
    pub emit: Features,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleSet {
    pub rules: Vec<MorphRule>,
    pub compositions: Vec<Composition>,
    pub lexicon: Option<BTreeSet<String>>,
    pub version_tag: String,
}

impl RuleSet {
    pub fn rule_index(&self, name: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.name == name)
    }

    /// Every licensed rule sequence: single rules plus all paths through
    /// the composition graph, shortest first then by rule-file order.
    pub fn licensed_sequences(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = (0..self.rules.len()).map(|i| vec![i]).collect();
        let mut frontier = out.clone();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for seq in &frontier {
                let last = *seq.last().unwrap();
                let mut seconds: Vec<usize> = self
                    .compositions
                    .iter()
                    .filter(|c| c.first == last)
                    .map(|c| c.second)
                    .collect();
                seconds.sort_unstable();
                seconds.dedup();
                for s in seconds {
                    let mut longer = seq.clone();
                    longer.push(s);
                    next.push(longer);
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    /// Features for a rule trace: each rule's EMIT in order, then the EMIT
    /// of each licensed adjacent pair; later entries override earlier ones.
    pub fn features_for(&self, trace: &[usize]) -> Features {
        let mut feats = Features::new();
        for &r in trace {
            for (k, v) in self.rules[r].emit.iter() {
                feats.insert(k, v);
            }
        }
        for pair in trace.windows(2) {
            for c in &self.compositions {
                if c.first == pair[0] && c.second == pair[1] {
                    for (k, v) in c.emit.iter() {
                        feats.insert(k, v);
                    }
                }
            }
        }
        feats
    }
}

pub fn parse_rules(text: &str) -> Result<RuleSet, RuleError> {
    let mut set = RuleSet::default();
    let mut pending_compose: Vec<(usize, String, String, Features)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let syntax = |message: String| RuleError::Syntax { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words: Vec<&str> = line.split_whitespace().collect();
        let explicit_name = match words[0].strip_suffix(':') {
            Some(name) if !name.is_empty() => {
                words.remove(0);
                Some(name.to_owned())
            }
            Some(_) => return Err(syntax("empty rule name".into())),
            None => None,
        };
        let Some((&keyword, rest)) = words.split_first() else {
            return Err(syntax("rule name without a rule".into()));
        };
        match keyword {
            "VERSION" | "LEXICON" | "COMPOSE" if explicit_name.is_some() => {
                return Err(syntax(format!("{keyword} lines take no name")));
            }
            "VERSION" => match rest {
                [tag] => set.version_tag = (*tag).to_owned(),
                _ => return Err(syntax("VERSION takes one value".into())),
            },
            "LEXICON" => {
                let lexicon = set.lexicon.get_or_insert_with(BTreeSet::new);
                lexicon.extend(rest.iter().map(|w| w.to_lowercase()));
            }
            "COMPOSE" => {
                let (pair, tail) = rest.split_at(rest.len().min(2));
                if pair.len() != 2 {
                    return Err(syntax("COMPOSE takes two rule names".into()));
                }
                let (emit, pos, leftover) = parse_tail(tail).map_err(syntax)?;
                if pos.is_some() || !leftover.is_empty() {
                    return Err(syntax("COMPOSE accepts only an EMIT clause".into()));
                }
                pending_compose.push((line_no, pair[0].into(), pair[1].into(), emit));
            }
            "PREFIX" | "SUFFIX" | "INFIX" | "REDUP" => {
                let Some((&arg, tail)) = rest.split_first() else {
                    return Err(syntax(format!("{keyword} needs a pattern")));
                };
                let (emit, applies_to, qualifiers) = parse_tail(tail).map_err(syntax)?;
                let lower = arg.to_lowercase();
                if keyword != "REDUP" && !lower.chars().all(char::is_alphabetic) {
                    return Err(syntax(format!("pattern {arg:?} must be letters")));
                }
                let pattern = match (keyword, qualifiers.as_slice()) {
                    ("PREFIX", []) => Pattern::Prefix(lower.clone()),
                    ("SUFFIX", []) => Pattern::Suffix(lower.clone(), SuffixContext::Any),
                    ("SUFFIX", ["AFTER_VOWEL"]) => {
                        Pattern::Suffix(lower.clone(), SuffixContext::AfterVowel)
                    }
                    ("SUFFIX", ["AFTER_CONSONANT"]) => {
                        Pattern::Suffix(lower.clone(), SuffixContext::AfterConsonant)
                    }
                    ("INFIX", []) | ("INFIX", ["AFTER_ONSET"]) => Pattern::Infix(lower.clone()),
                    ("REDUP", []) if arg == "CV" => Pattern::RedupCv,
                    ("REDUP", _) => return Err(syntax("only REDUP CV is supported".into())),
                    (_, q) => return Err(syntax(format!("unexpected {}", q.join(" ")))),
                };
                let name = explicit_name.unwrap_or_else(|| format!("{}-{}", keyword.to_lowercase(), lower));
                if set.rule_index(&name).is_some() {
                    return Err(syntax(format!("duplicate rule name {name}")));
                }
                set.rules.push(MorphRule { name, pattern, emit, applies_to });
            }
            other => return Err(syntax(format!("unknown keyword {other:?}"))),
        }
    }
    for (line, a, b, emit) in pending_compose {
        let lookup = |name: &str| {
            set.rule_index(name).ok_or_else(|| RuleError::Syntax {
                line,
                message: format!("unknown rule {name:?}"),
            })
        };
        let (first, second) = (lookup(&a)?, lookup(&b)?);
        set.compositions.push(Composition { first, second, emit });
    }
    check_acyclic(&set)?;
    Ok(set)
}

/// Split `EMIT k=v ... POS TAG` off the end of a line; returns the words
/// before the first clause as qualifiers.
fn parse_tail<'a>(words: &[&'a str]) -> Result<(Features, Option<Upos>, Vec<&'a str>), String> {
    let mut emit = Features::new();
    let mut pos = None;
    let mut qualifiers = Vec::new();
    let mut mode = "";
    for &w in words {
        match w {
            "EMIT" => mode = "EMIT",
            "POS" => mode = "POS",
            _ if mode == "EMIT" => {
                let (k, v) = w
                    .split_once('=')
                    .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                    .ok_or_else(|| format!("feature {w:?} is not Key=Value"))?;
                if emit.get(k).is_some() {
                    return Err(format!("feature {k} emitted twice"));
                }
                emit.insert(k, v);
            }
            _ if mode == "POS" => {
                if pos.is_some() {
                    return Err("POS takes one tag".into());
                }
                pos = Some(w.parse::<Upos>().map_err(|e| e.to_string())?);
            }
            _ => qualifiers.push(w),
        }
    }
    if mode == "POS" && pos.is_none() {
        return Err("POS needs a tag".into());
    }
    Ok((emit, pos, qualifiers))
}

fn check_acyclic(set: &RuleSet) -> Result<(), RuleError> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let n = set.rules.len();
    let mut state = vec![0u8; n];
    fn visit(node: usize, set: &RuleSet, state: &mut [u8]) -> Result<(), RuleError> {
        state[node] = 1;
        for c in set.compositions.iter().filter(|c| c.first == node) {
            match state[c.second] {
                1 => return Err(RuleError::Cycle(set.rules[c.second].name.clone())),
                0 => visit(c.second, set, state)?,
                _ => {}
            }
        }
        state[node] = 2;
        Ok(())
    }
    for node in 0..n {
        if state[node] == 0 {
            visit(node, set, &mut state)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_rule_kinds() {
        let set = parse_rules(
            "VERSION v9\n# comment\nINFIX um AFTER_ONSET EMIT Voice=Act POS VERB\n\
             nag: PREFIX nag\nSUFFIX hin AFTER_VOWEL\nREDUP CV\nLEXICON Basa bili\n\
             COMPOSE redup-cv infix-um EMIT Aspect=Imp\n",
        )
        .unwrap();
        assert_eq!(set.version_tag, "v9");
        let names: Vec<&str> = set.rules.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, vec!["infix-um", "nag", "suffix-hin", "redup-cv"]);
        assert_eq!(set.rules[0].applies_to, Some(Upos::Verb));
        assert_eq!(set.lexicon.as_ref().unwrap().len(), 2);
        assert_eq!(set.compositions[0].first, 3);
        assert_eq!(set.licensed_sequences().len(), 5);
        assert_eq!(set.features_for(&[3, 0]).to_string(), "Aspect=Imp|Voice=Act");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_rules("PREFIX nag\nINFIX\n").unwrap_err();
        assert_eq!(err, RuleError::Syntax { line: 2, message: "INFIX needs a pattern".into() });
        assert!(matches!(parse_rules("FROB x").unwrap_err(), RuleError::Syntax { line: 1, .. }));
        assert!(matches!(
            parse_rules("PREFIX nag EMIT Voice").unwrap_err(),
            RuleError::Syntax { line: 1, .. }
        ));
        assert!(matches!(
            parse_rules("PREFIX nag\nPREFIX nag").unwrap_err(),
            RuleError::Syntax { line: 2, .. }
        ));
        assert!(matches!(
            parse_rules("COMPOSE a b").unwrap_err(),
            RuleError::Syntax { line: 1, .. }
        ));
    }

    #[test]
    fn composition_cycles_are_rejected() {
        let err = parse_rules("REDUP CV\nCOMPOSE redup-cv redup-cv\n").unwrap_err();
        assert!(matches!(err, RuleError::Cycle(_)));
        let err = parse_rules("PREFIX a\nPREFIX b\nCOMPOSE prefix-a prefix-b\nCOMPOSE prefix-b prefix-a\n")
            .unwrap_err();
        assert!(matches!(err, RuleError::Cycle(_)));
    }
}

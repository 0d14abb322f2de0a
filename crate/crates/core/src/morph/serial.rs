//! Text serialization of compiled transducers.
//!
//! ```text
//! udkit-fst 1
//! [rules]
//! VERSION v1
//! infix-um: INFIX um AFTER_ONSET EMIT Aspect=Perf Voice=Act POS VERB
//! COMPOSE redup-cv infix-um EMIT Aspect=Imp
//! [transducer]
//! states 12
//! start 0
//! final 7 11
//! arc 0 1 eps u+0075
//! ident 1 1 consonant
//! ```
//!
//! The `[rules]` block is the rule set written back in the rule language
//! (explicit names, canonical order). Characters are written as `u+XXXX`,
//! tag symbols as `tag:N` (the rule index), epsilon as `eps`.

use std::fmt::Write as _;

use thiserror::Error;

use super::fst::{CharClass, Fst, Label, Sym};
use super::rules::{parse_rules, Pattern, RuleSet, SuffixContext};
use super::Transducer;

const MAGIC: &str = "udkit-fst 1";

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("transducer file line {line}: {message}")]
pub struct FstFormatError {
    pub line: usize,
    pub message: String,
}

fn rule_text(set: &RuleSet) -> String {
    let mut out = String::new();
    if !set.version_tag.is_empty() {
        let _ = writeln!(out, "VERSION {}", set.version_tag);
    }
    if let Some(lexicon) = &set.lexicon {
        let words: Vec<&str> = lexicon.iter().map(String::as_str).collect();
        let _ = writeln!(out, "LEXICON {}", words.join(" "));
    }
    for rule in &set.rules {
        let pattern = match &rule.pattern {
            Pattern::Prefix(p) => format!("PREFIX {p}"),
            Pattern::Suffix(s, SuffixContext::Any) => format!("SUFFIX {s}"),
            Pattern::Suffix(s, SuffixContext::AfterVowel) => format!("SUFFIX {s} AFTER_VOWEL"),
            Pattern::Suffix(s, SuffixContext::AfterConsonant) => {
                format!("SUFFIX {s} AFTER_CONSONANT")
            }
            Pattern::Infix(i) => format!("INFIX {i} AFTER_ONSET"),
            Pattern::RedupCv => "REDUP CV".to_owned(),
        };
        let _ = write!(out, "{}: {pattern}", rule.name);
        write_emit(&mut out, &rule.emit);
        if let Some(tag) = rule.applies_to {
            let _ = write!(out, " POS {tag}");
        }
        out.push('\n');
    }
    for c in &set.compositions {
        let _ = write!(out, "COMPOSE {} {}", set.rules[c.first].name, set.rules[c.second].name);
        write_emit(&mut out, &c.emit);
        out.push('\n');
    }
    out
}

fn write_emit(out: &mut String, emit: &crate::treebank::Features) {
    if !emit.is_empty() {
        out.push_str(" EMIT");
        for (k, v) in emit.iter() {
            let _ = write!(out, " {k}={v}");
        }
    }
}

fn sym_text(sym: Sym) -> String {
    match sym {
        Sym::Eps => "eps".to_owned(),
        Sym::Char(c) => format!("u+{:04X}", c as u32),
        Sym::Tag(t) => format!("tag:{t}"),
    }
}

fn parse_sym(text: &str) -> Option<Sym> {
    if text == "eps" {
        return Some(Sym::Eps);
    }
    if let Some(t) = text.strip_prefix("tag:") {
        return t.parse().ok().map(Sym::Tag);
    }
    let code = u32::from_str_radix(text.strip_prefix("u+")?, 16).ok()?;
    char::from_u32(code).map(Sym::Char)
}

pub fn write_transducer(t: &Transducer) -> String {
    let fst = &t.generator;
    let mut out = format!("{MAGIC}\n[rules]\n");
    out.push_str(&rule_text(&t.rules));
    out.push_str("[transducer]\n");
    let _ = writeln!(out, "states {}", fst.num_states());
    let _ = writeln!(out, "start {}", fst.start);
    let finals: Vec<String> = (0..fst.num_states())
        .filter(|&s| fst.finals[s])
        .map(|s| s.to_string())
        .collect();
    let _ = writeln!(out, "final {}", finals.join(" "));
    for (from, arcs) in fst.arcs.iter().enumerate() {
        for arc in arcs {
            let _ = match arc.label {
                Label::Pair(i, o) => writeln!(out, "arc {from} {} {} {}", arc.to, sym_text(i), sym_text(o)),
                Label::Ident(c) => writeln!(out, "ident {from} {} {}", arc.to, c.name()),
            };
        }
    }
    out
}

pub fn read_transducer(text: &str) -> Result<Transducer, FstFormatError> {
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, l)| l) != Some(MAGIC) {
        return Err(FstFormatError { line: 1, message: format!("expected header {MAGIC:?}") });
    }
    match lines.next() {
        Some((_, "[rules]")) => {}
        _ => return Err(FstFormatError { line: 2, message: "expected [rules]".into() }),
    }
    let mut rule_lines = String::new();
    let mut rules_end = None;
    for (idx, line) in lines.by_ref() {
        if line == "[transducer]" {
            rules_end = Some(idx);
            break;
        }
        rule_lines.push_str(line);
        rule_lines.push('\n');
    }
    let Some(rules_end) = rules_end else {
        return Err(FstFormatError { line: text.lines().count(), message: "missing [transducer]".into() });
    };
    let rules = parse_rules(&rule_lines).map_err(|e| FstFormatError {
        line: 3,
        message: format!("embedded rules: {e}"),
    })?;
    let mut fst = Fst { start: 0, finals: Vec::new(), arcs: Vec::new() };
    let mut declared = None;
    for (idx, line) in lines {
        let line_no = idx + 1;
        let err = |message: &str| FstFormatError { line: line_no, message: message.to_owned() };
        let parts: Vec<&str> = line.split(' ').collect();
        let num = |s: &str| s.parse::<usize>().map_err(|_| err(&format!("bad number {s:?}")));
        let state = |s: &str, n: Option<usize>| {
            let v = num(s)?;
            match n {
                Some(n) if v < n => Ok(v),
                _ => Err(err(&format!("state {s} out of range"))),
            }
        };
        match parts.as_slice() {
            ["states", n] => {
                let n = num(n)?;
                declared = Some(n);
                fst.arcs = vec![Vec::new(); n];
                fst.finals = vec![false; n];
            }
            ["start", s] => fst.start = state(s, declared)?,
            ["final", rest @ ..] => {
                for s in rest.iter().filter(|s| !s.is_empty()) {
                    let s = state(s, declared)?;
                    fst.finals[s] = true;
                }
            }
            ["arc", from, to, i, o] => {
                let (from, to) = (state(from, declared)?, state(to, declared)?);
                let i = parse_sym(i).ok_or_else(|| err("bad input symbol"))?;
                let o = parse_sym(o).ok_or_else(|| err("bad output symbol"))?;
                fst.add_arc(from, Label::Pair(i, o), to);
            }
            ["ident", from, to, class] => {
                let (from, to) = (state(from, declared)?, state(to, declared)?);
                let class = CharClass::from_name(class).ok_or_else(|| err("bad class"))?;
                fst.add_arc(from, Label::Ident(class), to);
            }
            [""] => {}
            _ => return Err(err("unrecognised line")),
        }
    }
    if declared.is_none() {
        return Err(FstFormatError { line: rules_end + 1, message: "missing states line".into() });
    }
    Ok(Transducer::from_parts(rules, fst))
}

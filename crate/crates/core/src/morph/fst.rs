//! A small unweighted finite-state transducer with class-labelled identity
//! arcs, epsilon-filtered composition, inversion and trimming.

use std::collections::{BTreeMap, VecDeque};

/// Characters matched by an identity arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CharClass {
    All,
    Vowel,
    Consonant,
}

pub(crate) const VOWELS: &str = "aeiou";

impl CharClass {
    pub fn contains(self, c: char) -> bool {
        let vowel = VOWELS.contains(c);
        match self {
            CharClass::All => true,
            CharClass::Vowel => vowel,
            CharClass::Consonant => c.is_alphabetic() && !vowel,
        }
    }

    fn intersect(self, other: CharClass) -> Option<CharClass> {
        use CharClass::*;
        match (self, other) {
            (All, x) | (x, All) => Some(x),
            (a, b) if a == b => Some(a),
            _ => None,
        }
    }

    pub(crate) fn name(self) -> &'static str {
        match self {
            CharClass::All => "any",
            CharClass::Vowel => "vowel",
            CharClass::Consonant => "consonant",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<CharClass> {
        match name {
            "any" => Some(CharClass::All),
            "vowel" => Some(CharClass::Vowel),
            "consonant" => Some(CharClass::Consonant),
            _ => None,
        }
    }
}

/// One side of a transition. Tags stand for rule indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sym {
    Eps,
    Char(char),
    Tag(u16),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    /// Read the first symbol, write the second.
    Pair(Sym, Sym),
    /// Read any character of the class and write it back unchanged.
    Ident(CharClass),
}

impl Label {
    fn input_is_eps(self) -> bool {
        matches!(self, Label::Pair(Sym::Eps, _))
    }

    fn output_is_eps(self) -> bool {
        matches!(self, Label::Pair(_, Sym::Eps))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Arc {
    pub label: Label,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fst {
    pub start: usize,
    pub finals: Vec<bool>,
    pub arcs: Vec<Vec<Arc>>,
}

impl Default for Fst {
    fn default() -> Self {
        Fst::new()
    }
}

impl Fst {
    /// A single non-final start state (the empty relation).
    pub fn new() -> Self {
        Fst {
            start: 0,
            finals: vec![false],
            arcs: vec![Vec::new()],
        }
    }

    pub fn num_states(&self) -> usize {
        self.arcs.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.iter().map(Vec::len).sum()
    }

    pub fn add_state(&mut self) -> usize {
        self.arcs.push(Vec::new());
        self.finals.push(false);
        self.arcs.len() - 1
    }

    pub fn add_arc(&mut self, from: usize, label: Label, to: usize) {
        self.arcs[from].push(Arc { label, to });
    }

    pub fn set_final(&mut self, state: usize) {
        self.finals[state] = true;
    }

    /// Append a chain writing `text` without reading anything; returns the
    /// last state of the chain.
    pub fn insert_chain(&mut self, from: usize, text: &str) -> usize {
        text.chars().fold(from, |state, c| {
            let next = self.add_state();
            self.add_arc(state, Label::Pair(Sym::Eps, Sym::Char(c)), next);
            next
        })
    }

    /// Union of several transducers under a fresh start state.
    pub fn union(parts: &[Fst]) -> Fst {
        let mut out = Fst::new();
        for part in parts {
            let offset = out.num_states();
            for (state, arcs) in part.arcs.iter().enumerate() {
                out.arcs.push(
                    arcs.iter()
                        .map(|a| Arc { label: a.label, to: a.to + offset })
                        .collect(),
                );
                out.finals.push(part.finals[state]);
            }
            out.add_arc(0, Label::Pair(Sym::Eps, Sym::Eps), part.start + offset);
        }
        out
    }

    /// Swap input and output on every arc.
    pub fn invert(&self) -> Fst {
        let mut out = self.clone();
        for arcs in &mut out.arcs {
            for arc in arcs.iter_mut() {
                if let Label::Pair(i, o) = arc.label {
                    arc.label = Label::Pair(o, i);
                }
            }
        }
        out
    }

    /// Drop states that are unreachable from the start or cannot reach a
    /// final state. Surviving states keep their relative order.
    pub fn trim(&self) -> Fst {
        let n = self.num_states();
        let mut forward = vec![false; n];
        let mut stack = vec![self.start];
        forward[self.start] = true;
        while let Some(s) = stack.pop() {
            for a in &self.arcs[s] {
                if !forward[a.to] {
                    forward[a.to] = true;
                    stack.push(a.to);
                }
            }
        }
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (s, arcs) in self.arcs.iter().enumerate() {
            for a in arcs {
                reverse[a.to].push(s);
            }
        }
        let mut backward = self.finals.clone();
        let mut stack: Vec<usize> = (0..n).filter(|&s| self.finals[s]).collect();
        while let Some(s) = stack.pop() {
            for &p in &reverse[s] {
                if !backward[p] {
                    backward[p] = true;
                    stack.push(p);
                }
            }
        }
        if !(forward[self.start] && backward[self.start]) {
            return Fst::new();
        }
        let mut new_id = vec![usize::MAX; n];
        let mut out = Fst {
            start: 0,
            finals: Vec::new(),
            arcs: Vec::new(),
        };
        for s in 0..n {
            if forward[s] && backward[s] {
                new_id[s] = out.add_state();
                out.finals[new_id[s]] = self.finals[s];
            }
        }
        for s in 0..n {
            if new_id[s] == usize::MAX {
                continue;
            }
            let mut arcs: Vec<Arc> = self.arcs[s]
                .iter()
                .filter(|a| new_id[a.to] != usize::MAX)
                .map(|a| Arc { label: a.label, to: new_id[a.to] })
                .collect();
            arcs.dedup();
            out.arcs[new_id[s]] = arcs;
        }
        out.start = new_id[self.start];
        out
    }

    /// Relational composition: `self` first, then `other`. Epsilon moves
    /// are sequenced by the three-state filter so each pair of paths is
    /// realised once.
    pub fn compose(&self, other: &Fst) -> Fst {
        let mut out = Fst {
            start: 0,
            finals: Vec::new(),
            arcs: Vec::new(),
        };
        let mut index: BTreeMap<(usize, usize, u8), usize> = BTreeMap::new();
        let mut queue = VecDeque::new();
        let mut intern = |key: (usize, usize, u8),
                          out: &mut Fst,
                          queue: &mut VecDeque<(usize, usize, u8)>|
         -> usize {
            *index.entry(key).or_insert_with(|| {
                let id = out.add_state();
                out.finals[id] = self.finals[key.0] && other.finals[key.1];
                queue.push_back(key);
                id
            })
        };
        intern((self.start, other.start, 0), &mut out, &mut queue);
        while let Some(key @ (qa, qb, filter)) = queue.pop_front() {
            let from = intern(key, &mut out, &mut queue);
            for ea in &self.arcs[qa] {
                if ea.label.output_is_eps() {
                    let Label::Pair(i, _) = ea.label else { unreachable!() };
                    // Left side moves alone.
                    if filter != 2 {
                        let to = intern((ea.to, qb, 1), &mut out, &mut queue);
                        out.add_arc(from, Label::Pair(i, Sym::Eps), to);
                    }
                    // Both sides take an epsilon together.
                    if filter == 0 {
                        for eb in &other.arcs[qb] {
                            if let Label::Pair(Sym::Eps, o) = eb.label {
                                let to = intern((ea.to, eb.to, 0), &mut out, &mut queue);
                                out.add_arc(from, Label::Pair(i, o), to);
                            }
                        }
                    }
                    continue;
                }
                for eb in &other.arcs[qb] {
                    if eb.label.input_is_eps() {
                        continue;
                    }
                    if let Some(label) = combine(ea.label, eb.label) {
                        let to = intern((ea.to, eb.to, 0), &mut out, &mut queue);
                        out.add_arc(from, label, to);
                    }
                }
            }
            if filter != 1 {
                for eb in &other.arcs[qb] {
                    if let Label::Pair(Sym::Eps, o) = eb.label {
                        let to = intern((qa, eb.to, 2), &mut out, &mut queue);
                        out.add_arc(from, Label::Pair(Sym::Eps, o), to);
                    }
                }
            }
        }
        out.trim()
    }

    /// All output strings for `input`, in discovery order (duplicates are
    /// possible when distinct paths write the same string).
    pub fn apply(&self, input: &[Sym]) -> Vec<Vec<Sym>> {
        let mut results = Vec::new();
        let mut output = Vec::new();
        // Epsilon cycles cannot be produced by the compiler, but a bound on
        // consecutive input-free steps keeps hand-written files safe.
        let eps_budget = self.num_states() + 1;
        self.walk(self.start, input, 0, eps_budget, &mut output, &mut results);
        results
    }

    fn walk(
        &self,
        state: usize,
        input: &[Sym],
        pos: usize,
        eps_left: usize,
        output: &mut Vec<Sym>,
        results: &mut Vec<Vec<Sym>>,
    ) {
        if pos == input.len() && self.finals[state] {
            results.push(output.clone());
        }
        for arc in &self.arcs[state] {
            let (consumes, write) = match arc.label {
                Label::Pair(Sym::Eps, o) => (false, o),
                Label::Pair(i, o) => {
                    if input.get(pos) != Some(&i) {
                        continue;
                    }
                    (true, o)
                }
                Label::Ident(class) => match input.get(pos) {
                    Some(&Sym::Char(c)) if class.contains(c) => (true, Sym::Char(c)),
                    _ => continue,
                },
            };
            if !consumes && eps_left == 0 {
                continue;
            }
            let pushed = write != Sym::Eps;
            if pushed {
                output.push(write);
            }
            if consumes {
                self.walk(arc.to, input, pos + 1, self.num_states() + 1, output, results);
            } else {
                self.walk(arc.to, input, pos, eps_left - 1, output, results);
            }
            if pushed {
                output.pop();
            }
        }
    }
}

/// Label of the composed arc when `a`'s output meets `b`'s input (both
/// non-epsilon), or `None` if they cannot match.
fn combine(a: Label, b: Label) -> Option<Label> {
    use Label::*;
    match (a, b) {
        (Pair(i, x), Pair(y, o)) => (x == y).then_some(Pair(i, o)),
        (Pair(i, Sym::Char(x)), Ident(c)) => c.contains(x).then_some(Pair(i, Sym::Char(x))),
        (Ident(c), Pair(Sym::Char(y), o)) => c.contains(y).then_some(Pair(Sym::Char(y), o)),
        (Ident(c1), Ident(c2)) => c1.intersect(c2).map(Ident),
        _ => None,
    }
}

pub(crate) fn chars(text: &str) -> Vec<Sym> {
    text.chars().map(Sym::Char).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Identity on a fixed word.
    fn word(text: &str) -> Fst {
        let mut f = Fst::new();
        let end = text.chars().fold(0, |s, c| {
            let n = f.add_state();
            f.add_arc(s, Label::Pair(Sym::Char(c), Sym::Char(c)), n);
            n
        });
        f.set_final(end);
        f
    }

    fn strings(outputs: Vec<Vec<Sym>>) -> Vec<String> {
        let mut out: Vec<String> = outputs
            .into_iter()
            .map(|o| {
                o.into_iter()
                    .map(|s| match s {
                        Sym::Char(c) => c.to_string(),
                        Sym::Tag(t) => format!("<{t}>"),
                        Sym::Eps => String::new(),
                    })
                    .collect()
            })
            .collect();
        out.sort();
        out
    }

    fn prefixer(p: &str) -> Fst {
        let mut f = Fst::new();
        let s = f.insert_chain(0, p);
        f.add_arc(s, Label::Ident(CharClass::All), s);
        f.set_final(s);
        f
    }

    #[test]
    fn compose_with_epsilons_on_both_sides() {
        let g = word("luto").compose(&prefixer("nag")).compose(&prefixer("pa"));
        assert_eq!(strings(g.apply(&chars("luto"))), vec!["panagluto"]);
        // Exactly one path despite interleaved epsilons.
        assert_eq!(g.apply(&chars("luto")).len(), 1);
        assert_eq!(strings(g.invert().apply(&chars("panagluto"))), vec!["luto"]);
    }

    #[test]
    fn class_arcs_intersect() {
        let mut vowels_only = Fst::new();
        vowels_only.add_arc(0, Label::Ident(CharClass::Vowel), 0);
        vowels_only.set_final(0);
        let mut any = Fst::new();
        any.add_arc(0, Label::Ident(CharClass::All), 0);
        any.set_final(0);
        let both = any.compose(&vowels_only);
        assert_eq!(strings(both.apply(&chars("aei"))), vec!["aei"]);
        assert!(both.apply(&chars("ab")).is_empty());
        let mut cons = Fst::new();
        cons.add_arc(0, Label::Ident(CharClass::Consonant), 0);
        assert_eq!(vowels_only.compose(&cons).num_arcs(), 0);
    }

    #[test]
    fn double_inversion_is_identity() {
        let g = word("basa").compose(&prefixer("nag"));
        assert_eq!(g.invert().invert(), g);
    }

    #[test]
    fn trim_removes_dead_states() {
        let mut f = word("ab");
        let dead = f.add_state();
        f.add_arc(0, Label::Ident(CharClass::All), dead);
        let t = f.trim();
        assert_eq!(t.num_states(), 3);
        assert_eq!(strings(t.apply(&chars("ab"))), vec!["ab"]);
        assert_eq!(Fst::new().trim(), Fst::new());
    }

    #[test]
    fn union_keeps_all_parts() {
        let u = Fst::union(&[word("ab"), word("cd")]);
        assert_eq!(strings(u.apply(&chars("cd"))), vec!["cd"]);
        assert_eq!(strings(u.apply(&chars("ab"))), vec!["ab"]);
        assert!(u.apply(&chars("ac")).is_empty());
    }
}

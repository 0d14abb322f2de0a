//! Unsupervised sentence boundary detection (Punkt, Kiss & Strunk 2006).
//!
//! Training collects type statistics from raw text and decides three sets:
//! abbreviations (scaled log-likelihood ratio of a type co-occurring with
//! a final period), collocations spanning a period and frequent sentence
//! starters (both by Dunning's collocation log-likelihood with a one-sided
//! direction check). Segmentation first marks every period as a break
//! unless it ends a known abbreviation, then revises the decision with the
//! collocation, orthographic and sentence-starter heuristics.

use std::collections::{BTreeMap, BTreeSet};

use super::words::{is_punct, split_text, Word};

pub(crate) const ORTHO_BEG_UC: u8 = 1 << 1;
pub(crate) const ORTHO_MID_UC: u8 = 1 << 2;
pub(crate) const ORTHO_UNK_UC: u8 = 1 << 3;
pub(crate) const ORTHO_BEG_LC: u8 = 1 << 4;
pub(crate) const ORTHO_MID_LC: u8 = 1 << 5;
pub(crate) const ORTHO_UNK_LC: u8 = 1 << 6;
const ORTHO_UC: u8 = ORTHO_BEG_UC | ORTHO_MID_UC | ORTHO_UNK_UC;
const ORTHO_LC: u8 = ORTHO_BEG_LC | ORTHO_MID_LC | ORTHO_UNK_LC;

const NUMBER_TYPE: &str = "##number##";

/// Decision thresholds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PunktParams {
    /// Minimum scaled log-likelihood for an abbreviation.
    pub abbrev: f64,
    /// Minimum log-likelihood for a collocation.
    pub colloc: f64,
    /// Minimum log-likelihood for a frequent sentence starter.
    pub starter: f64,
}

impl Default for PunktParams {
    fn default() -> Self {
        PunktParams {
            abbrev: 0.3,
            colloc: 7.88,
            starter: 30.0,
        }
    }
}

/// Learned boundary statistics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryModel {
    pub params: PunktParams,
    /// Lowercased abbreviation types, without the final period.
    pub abbreviations: BTreeSet<String>,
    pub collocations: BTreeSet<(String, String)>,
    pub sentence_starters: BTreeSet<String>,
    /// Orthographic context flags per type.
    pub ortho_context: BTreeMap<String, u8>,
    /// Frequency of each type; period-final occurrences keep the period.
    pub type_counts: BTreeMap<String, usize>,
    pub total_tokens: usize,
}

impl BoundaryModel {
    pub fn is_abbreviation(&self, word: &str) -> bool {
        let lower = word.to_lowercase();
        self.abbreviations.contains(&lower)
            || lower
                .rsplit('-')
                .next()
                .map(|last| last != lower && self.abbreviations.contains(last))
                .unwrap_or(false)
    }
}

/// A `[start, end)` character range of one sentence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SentenceSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug)]
struct PunktToken {
    text: String,
    start: usize,
    end: usize,
    typ: String,
    period_final: bool,
    linestart: bool,
    parastart: bool,
    sentbreak: bool,
    abbr: bool,
    ellipsis: bool,
}

fn is_numeric(tok: &str) -> bool {
    // ^-?[\.,]?\d[\d,\.-]*\.?$
    let chars: Vec<char> = tok.chars().collect();
    let mut i = 0;
    if chars.get(i) == Some(&'-') {
        i += 1;
    }
    if matches!(chars.get(i), Some('.') | Some(',')) {
        i += 1;
    }
    if !chars.get(i).map(|c| c.is_ascii_digit()).unwrap_or(false) {
        return false;
    }
    i += 1;
    chars[i..]
        .iter()
        .all(|c| c.is_ascii_digit() || matches!(c, ',' | '.' | '-'))
}

fn word_char(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

impl PunktToken {
    fn new(word: Word, linestart: bool, parastart: bool) -> Self {
        let lower = word.form.to_lowercase();
        let typ = if is_numeric(&lower) {
            NUMBER_TYPE.to_owned()
        } else {
            lower
        };
        PunktToken {
            period_final: word.form.ends_with('.'),
            text: word.form,
            start: word.start,
            end: word.end,
            typ,
            linestart,
            parastart,
            sentbreak: false,
            abbr: false,
            ellipsis: false,
        }
    }

    fn type_no_period(&self) -> &str {
        if self.typ.chars().count() > 1 && self.typ.ends_with('.') {
            &self.typ[..self.typ.len() - 1]
        } else {
            &self.typ
        }
    }

    fn type_no_sentperiod(&self) -> &str {
        if self.sentbreak {
            self.type_no_period()
        } else {
            &self.typ
        }
    }

    fn first_upper(&self) -> bool {
        self.text.chars().next().map(char::is_uppercase).unwrap_or(false)
    }

    fn first_lower(&self) -> bool {
        self.text.chars().next().map(char::is_lowercase).unwrap_or(false)
    }

    fn first_case(&self) -> Option<bool> {
        if self.first_upper() {
            Some(true)
        } else if self.first_lower() {
            Some(false)
        } else {
            None
        }
    }

    fn is_ellipsis(&self) -> bool {
        self.text == "…" || (self.text.len() >= 2 && self.text.chars().all(|c| c == '.'))
    }

    fn is_sent_end(&self) -> bool {
        self.text == "." || (!self.text.is_empty() && self.text.chars().all(|c| c == '!' || c == '?'))
    }

    fn is_number(&self) -> bool {
        self.typ.starts_with(NUMBER_TYPE)
    }

    fn is_initial(&self) -> bool {
        let mut chars = self.text.chars();
        matches!((chars.next(), chars.next(), chars.next()), (Some(c), Some('.'), None) if word_char(c))
    }

    fn is_alpha(&self) -> bool {
        !self.text.is_empty() && self.text.chars().all(word_char)
    }

    fn is_non_punct(&self) -> bool {
        self.typ.chars().any(word_char)
    }
}

/// Tokenize for boundary detection: like the word tokenizer, but a single
/// final period always stays attached to its word.
fn punkt_tokens(text: &str) -> Vec<PunktToken> {
    let words = split_text(text, |_| true);
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::with_capacity(words.len());
    let mut prev_end = 0;
    for (idx, word) in words.into_iter().enumerate() {
        let newlines = chars[prev_end..word.start].iter().filter(|&&c| c == '\n').count();
        let linestart = idx == 0 || newlines >= 1;
        let parastart = idx > 0 && newlines >= 2;
        prev_end = word.end;
        out.push(PunktToken::new(word, linestart, parastart));
    }
    out
}

/// Log-likelihood ratio for an abbreviation candidate: null hypothesis is
/// that the period occurs with the type at its corpus rate, alternative is
/// that it almost always does (0.99).
pub(crate) fn dunning_log_likelihood(count_a: f64, count_b: f64, count_ab: f64, n: f64) -> f64 {
    let p1 = count_b / n;
    let p2: f64 = 0.99;
    let null_hypo = count_ab * p1.ln() + (count_a - count_ab) * (1.0 - p1).ln();
    let alt_hypo = count_ab * p2.ln() + (count_a - count_ab) * (1.0 - p2).ln();
    -2.0 * (null_hypo - alt_hypo)
}

/// Dunning's collocation log-likelihood.
pub(crate) fn col_log_likelihood(count_a: f64, count_b: f64, count_ab: f64, n: f64) -> f64 {
    let p = count_b / n;
    let p1 = count_ab / count_a;
    let p2 = (count_b - count_ab) / (n - count_a);
    let xlogy = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * y.ln() };

    let s1 = xlogy(count_ab, p) + xlogy(count_a - count_ab, 1.0 - p);
    let s2 = xlogy(count_b - count_ab, p) + xlogy(n - count_a - count_b + count_ab, 1.0 - p);
    let s3 = if count_a == count_ab {
        0.0
    } else {
        xlogy(count_ab, p1) + xlogy(count_a - count_ab, 1.0 - p1)
    };
    let s4 = if count_b == count_ab {
        0.0
    } else {
        xlogy(count_b - count_ab, p2) + xlogy(n - count_a - count_b + count_ab, 1.0 - p2)
    };
    -2.0 * (s1 + s2 - s3 - s4)
}

/// Scaled abbreviation score for a type (given without its final period).
pub(crate) fn abbreviation_score(
    typ: &str,
    with_period: usize,
    without_period: usize,
    period_tokens: usize,
    total: usize,
) -> f64 {
    let num_periods = typ.matches('.').count() + 1;
    let num_nonperiods = typ.chars().count() + 1 - num_periods;
    let ll = dunning_log_likelihood(
        (with_period + without_period) as f64,
        period_tokens as f64,
        with_period as f64,
        total as f64,
    );
    let f_length = (-(num_nonperiods as f64)).exp();
    let f_periods = num_periods as f64;
    let f_penalty = (num_nonperiods as f64).powi(-(without_period as i32));
    ll * f_length * f_periods * f_penalty
}

fn first_pass(tokens: &mut [PunktToken], abbreviations: &BTreeSet<String>) {
    for tok in tokens.iter_mut() {
        if tok.is_sent_end() {
            tok.sentbreak = true;
        } else if tok.is_ellipsis() {
            tok.ellipsis = true;
        } else if tok.period_final && !tok.text.ends_with("..") {
            let stem = tok.text[..tok.text.len() - 1].to_lowercase();
            let last = stem.rsplit('-').next().unwrap_or(&stem);
            if abbreviations.contains(&stem) || abbreviations.contains(last) {
                tok.abbr = true;
            } else {
                tok.sentbreak = true;
            }
        }
    }
}

fn ortho_flag(context: &str, upper: bool) -> u8 {
    match (context, upper) {
        ("initial", true) => ORTHO_BEG_UC,
        ("internal", true) => ORTHO_MID_UC,
        ("unknown", true) => ORTHO_UNK_UC,
        ("initial", false) => ORTHO_BEG_LC,
        ("internal", false) => ORTHO_MID_LC,
        ("unknown", false) => ORTHO_UNK_LC,
        _ => 0,
    }
}

fn collect_ortho(tokens: &[PunktToken]) -> BTreeMap<String, u8> {
    let mut ortho: BTreeMap<String, u8> = BTreeMap::new();
    let mut context = "internal";
    for tok in tokens {
        if tok.parastart && context != "unknown" {
            context = "initial";
        }
        if tok.linestart && context == "internal" {
            context = "unknown";
        }
        if let Some(upper) = tok.first_case() {
            let flag = ortho_flag(context, upper);
            if flag != 0 {
                *ortho.entry(tok.type_no_sentperiod().to_owned()).or_default() |= flag;
            }
        }
        context = if tok.sentbreak {
            if tok.is_number() || tok.is_initial() {
                "unknown"
            } else {
                "initial"
            }
        } else if tok.ellipsis || tok.abbr {
            "unknown"
        } else {
            "internal"
        };
    }
    ortho
}

/// Train a boundary model on raw text.
pub fn train_boundary_model(raw_text: &str, params: PunktParams) -> BoundaryModel {
    let mut tokens = punkt_tokens(raw_text);
    let total = tokens.len();

    let mut type_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut period_tokens = 0;
    for tok in &tokens {
        *type_counts.entry(tok.typ.clone()).or_default() += 1;
        if tok.period_final {
            period_tokens += 1;
        }
    }
    let count = |t: &str| type_counts.get(t).copied().unwrap_or(0);

    let mut abbreviations = BTreeSet::new();
    for typ in type_counts.keys() {
        let Some(stem) = typ.strip_suffix('.') else { continue };
        if stem.is_empty() || !stem.chars().any(word_char) || typ.starts_with(NUMBER_TYPE) {
            continue;
        }
        let score = abbreviation_score(stem, count(typ), count(stem), period_tokens, total);
        if score >= params.abbrev {
            abbreviations.insert(stem.to_owned());
        }
    }

    first_pass(&mut tokens, &abbreviations);
    let ortho_context = collect_ortho(&tokens);
    let sentbreaks = tokens.iter().filter(|t| t.sentbreak).count();

    let mut starter_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut colloc_counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    for pair in tokens.windows(2) {
        let (t1, t2) = (&pair[0], &pair[1]);
        if !t1.period_final {
            continue;
        }
        if t1.sentbreak && !(t1.is_number() || t1.is_initial()) && t2.is_alpha() {
            *starter_counts.entry(t2.typ.clone()).or_default() += 1;
        }
        if t1.sentbreak && (t1.is_number() || t1.is_initial()) && t1.is_non_punct() && t2.is_non_punct() {
            let key = (t1.type_no_period().to_owned(), t2.type_no_sentperiod().to_owned());
            *colloc_counts.entry(key).or_default() += 1;
        }
    }

    let n = total as f64;
    let mut sentence_starters = BTreeSet::new();
    if sentbreaks > 0 {
        for (typ, &at_break) in &starter_counts {
            let typ_count = count(typ) + count(&format!("{typ}."));
            if typ_count < at_break {
                continue;
            }
            let ll = col_log_likelihood(sentbreaks as f64, typ_count as f64, at_break as f64, n);
            if ll >= params.starter && n / sentbreaks as f64 > typ_count as f64 / at_break as f64 {
                sentence_starters.insert(typ.clone());
            }
        }
    }

    let mut collocations = BTreeSet::new();
    for ((a, b), &col_count) in &colloc_counts {
        let a_count = count(a) + count(&format!("{a}."));
        let b_count = count(b) + count(&format!("{b}."));
        if a_count > 1 && b_count > 1 && 1 < col_count && col_count <= a_count.min(b_count) {
            let ll = col_log_likelihood(a_count as f64, b_count as f64, col_count as f64, n);
            if ll >= params.colloc && n / a_count as f64 > b_count as f64 / col_count as f64 {
                collocations.insert((a.clone(), b.clone()));
            }
        }
    }

    BoundaryModel {
        params,
        abbreviations,
        collocations,
        sentence_starters,
        ortho_context,
        type_counts,
        total_tokens: total,
    }
}

/// `Some(true)`: looks sentence-initial; `Some(false)`: does not; `None`: unknown.
fn ortho_heuristic(model: &BoundaryModel, tok: &PunktToken) -> Option<bool> {
    if matches!(tok.text.as_str(), ";" | ":" | "," | "." | "!" | "?") {
        return Some(false);
    }
    let ortho = model
        .ortho_context
        .get(tok.type_no_sentperiod())
        .copied()
        .unwrap_or(0);
    if tok.first_upper() && ortho & ORTHO_LC != 0 && ortho & ORTHO_MID_UC == 0 {
        return Some(true);
    }
    if tok.first_lower() && (ortho & ORTHO_UC != 0 || ortho & ORTHO_BEG_LC == 0) {
        return Some(false);
    }
    None
}

fn second_pass(model: &BoundaryModel, t1: &mut PunktToken, t2: &PunktToken) {
    if t1.ellipsis {
        t1.sentbreak = !t2.first_lower();
        return;
    }
    if !t1.period_final {
        return;
    }
    let typ = t1.type_no_period().to_owned();
    let next_typ = t2.type_no_sentperiod();
    let is_initial = t1.is_initial();

    if model.collocations.contains(&(typ.clone(), next_typ.to_owned())) {
        t1.sentbreak = false;
        t1.abbr = true;
        return;
    }
    if t1.abbr && !is_initial {
        if ortho_heuristic(model, t2) == Some(true) {
            t1.sentbreak = true;
            return;
        }
        if t2.first_upper() && model.sentence_starters.contains(next_typ) {
            t1.sentbreak = true;
            return;
        }
    }
    if is_initial || typ == NUMBER_TYPE {
        let starter = ortho_heuristic(model, t2);
        if starter == Some(false) {
            t1.sentbreak = false;
            t1.abbr = true;
            return;
        }
        let ortho = model.ortho_context.get(next_typ).copied().unwrap_or(0);
        if starter.is_none() && is_initial && t2.first_upper() && ortho & ORTHO_LC == 0 {
            t1.sentbreak = false;
            t1.abbr = true;
        }
    }
}

fn annotate(text: &str, model: &BoundaryModel) -> Vec<PunktToken> {
    let mut tokens = punkt_tokens(text);
    first_pass(&mut tokens, &model.abbreviations);
    for i in 0..tokens.len() {
        if i + 1 < tokens.len() {
            let (head, tail) = tokens.split_at_mut(i + 1);
            second_pass(model, &mut head[i], &tail[0]);
        } else if tokens[i].ellipsis {
            tokens[i].sentbreak = true;
        }
    }
    tokens
}

/// Split `text` into sentence spans (character offsets).
pub fn segment_sentences(text: &str, model: &BoundaryModel) -> Vec<SentenceSpan> {
    let tokens = annotate(text, model);
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    for tok in &tokens {
        let s = *start.get_or_insert(tok.start);
        if tok.sentbreak {
            spans.push(SentenceSpan { start: s, end: tok.end });
            start = None;
        }
    }
    if let (Some(s), Some(last)) = (start, tokens.last()) {
        spans.push(SentenceSpan { start: s, end: last.end });
    }
    spans
}

/// Words of one sentence; a final period stays on known abbreviations.
pub fn tokenize_sentence(sentence_text: &str, model: &BoundaryModel) -> Vec<Word> {
    split_text(sentence_text, |core| {
        !core.chars().all(is_punct) && model.is_abbreviation(core)
    })
}

#[cfg(test)]
/// Frequencies used by tests and model inspection.
pub(crate) fn period_token_count(model: &BoundaryModel) -> usize {
    model
        .type_counts
        .iter()
        .filter(|(t, _)| t.ends_with('.'))
        .map(|(_, c)| *c)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn repeat(s: &str, n: usize) -> String {
        std::iter::repeat_n(s, n).collect::<Vec<_>>().join(" ")
    }

    fn sentences(text: &str, model: &BoundaryModel) -> Vec<String> {
        let chars: Vec<char> = text.chars().collect();
        segment_sentences(text, model)
            .iter()
            .map(|s| chars[s.start..s.end].iter().collect())
            .collect()
    }

    #[test]
    fn numeric_types() {
        assert!(is_numeric("4,000"));
        assert!(is_numeric("2017."));
        assert!(is_numeric("-1.5"));
        assert!(!is_numeric("a1"));
        assert!(!is_numeric("-"));
    }

    #[test]
    fn empty_model_splits_on_periods() {
        let model = BoundaryModel::default();
        assert_eq!(sentences("Hello world. Goodbye.", &model), vec!["Hello world.", "Goodbye."]);
        assert!(segment_sentences("", &model).is_empty());
    }

    #[test]
    fn no_periods_means_empty_sets() {
        let model = train_boundary_model(&repeat("walang tuldok dito", 50), PunktParams::default());
        assert!(model.abbreviations.is_empty());
        assert!(model.collocations.is_empty());
        assert!(model.sentence_starters.is_empty());
        assert_eq!(model.total_tokens, 150);
    }

    #[test]
    fn quotation_split_after_exclamation() {
        let model = BoundaryModel::default();
        let out = sentences("\"Maraming salamat po!\" sabi ko.", &model);
        assert_eq!(out, vec!["\"Maraming salamat po!", "\" sabi ko."]);
    }

    #[test]
    fn ellipsis_breaks_unless_lowercase_follows() {
        let model = BoundaryModel::default();
        assert_eq!(sentences("Teka... Sino ka?", &model).len(), 2);
        assert_eq!(sentences("Teka... sino ka?", &model).len(), 1);
    }

    #[test]
    fn period_count_matches_training() {
        let model = train_boundary_model(&repeat("I saw Dr. Cruz today. He waved.", 10), PunktParams::default());
        assert_eq!(period_token_count(&model), 30);
    }

    #[test]
    fn training_is_deterministic() {
        let text = repeat("Engr. Reyes spoke. Si G. Santos ay dumating noong 2017. Sino siya?", 40);
        let a = train_boundary_model(&text, PunktParams::default());
        let b = train_boundary_model(&text, PunktParams::default());
        assert_eq!(a, b);
    }
}

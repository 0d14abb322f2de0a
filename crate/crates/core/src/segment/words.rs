//! Whitespace-and-punctuation word tokenization with exact character spans.

/// A word with its `[start, end)` character span in the tokenized text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Word {
    pub form: String,
    pub start: usize,
    pub end: usize,
}

pub(crate) fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '“' | '”' | '‘' | '’' | '«' | '»' | '„' | '‹' | '›' | '–' | '—' | '…' | '¡' | '¿'
        )
}

/// Split `text` into words. Whitespace separates chunks; leading and
/// trailing punctuation is detached from each chunk (runs of the same
/// character, such as `...`, stay together); punctuation inside a chunk
/// (`4,000`, `U.S`) is kept.
pub fn tokenize_words(text: &str) -> Vec<Word> {
    split_text(text, |_| false)
}

/// Like [`tokenize_words`], but a single final period stays on a word
/// when `keep_period(word_without_period)` says it is an abbreviation.
pub fn tokenize_words_with(text: &str, keep_period: impl Fn(&str) -> bool) -> Vec<Word> {
    split_text(text, keep_period)
}

pub(crate) fn split_text(text: &str, keep_period: impl Fn(&str) -> bool) -> Vec<Word> {
    let chars: Vec<char> = text.chars().collect();
    let mut words = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        split_chunk(&chars, start, i, &keep_period, &mut words);
    }
    words
}

fn run_end(chars: &[char], from: usize, limit: usize) -> usize {
    let mut j = from + 1;
    while j < limit && chars[j] == chars[from] {
        j += 1;
    }
    j
}

fn run_start(chars: &[char], to: usize, limit: usize) -> usize {
    let mut j = to - 1;
    while j > limit && chars[j - 1] == chars[to - 1] {
        j -= 1;
    }
    j
}

fn word(chars: &[char], start: usize, end: usize) -> Word {
    Word {
        form: chars[start..end].iter().collect(),
        start,
        end,
    }
}

fn split_chunk(
    chars: &[char],
    start: usize,
    end: usize,
    keep_period: &impl Fn(&str) -> bool,
    out: &mut Vec<Word>,
) {
    let mut lo = start;
    while lo < end && is_punct(chars[lo]) {
        let stop = run_end(chars, lo, end);
        out.push(word(chars, lo, stop));
        lo = stop;
    }
    if lo == end {
        return;
    }
    let mut hi = end;
    let mut trailing = Vec::new();
    while hi > lo && is_punct(chars[hi - 1]) {
        let from = run_start(chars, hi, lo);
        trailing.push((from, hi));
        hi = from;
    }
    // `trailing` is innermost-last; the run adjacent to the core is last.
    if let Some(&(from, to)) = trailing.last() {
        if to - from == 1 && chars[from] == '.' {
            let core: String = chars[lo..hi].iter().collect();
            if keep_period(&core) {
                hi = to;
                trailing.pop();
            }
        }
    }
    out.push(word(chars, lo, hi));
    for &(from, to) in trailing.iter().rev() {
        out.push(word(chars, from, to));
    }
}

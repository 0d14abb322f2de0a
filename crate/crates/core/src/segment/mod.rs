//! Unsupervised sentence segmentation and word tokenization.

mod model_io;
mod punkt;
mod words;

pub use model_io::{read_model, write_model, ModelFormatError};
pub use punkt::{
    segment_sentences, tokenize_sentence, train_boundary_model, BoundaryModel, PunktParams,
    SentenceSpan,
};
pub use words::{tokenize_words, tokenize_words_with, Word};

use crate::treebank::{AnnotatedSentence, Token, Treebank};

/// Segment raw text into unannotated sentences.
///
/// Every sentence gets `sent_id` and `text` comments and per-token
/// character offsets into `text`; all annotation columns stay unset.
/// Tokens followed directly by the next token (no whitespace) carry
/// `SpaceAfter=No`.
pub fn segment_to_treebank(text: &str, model: &BoundaryModel) -> Treebank {
    let chars: Vec<char> = text.chars().collect();
    let mut treebank = Treebank::new("segmenter");
    for span in segment_sentences(text, model) {
        let sentence_text: String = chars[span.start..span.end].iter().collect();
        let words = tokenize_sentence(&sentence_text, model);
        if words.is_empty() {
            continue;
        }
        let mut sentence = AnnotatedSentence::new();
        let mut offsets = Vec::with_capacity(words.len());
        for (idx, word) in words.iter().enumerate() {
            let mut tok = Token::new(idx + 1, word.form.clone());
            let glued = words
                .get(idx + 1)
                .map(|next| next.start == word.end)
                .unwrap_or(false);
            if glued {
                tok.misc = Some("SpaceAfter=No".to_owned());
            }
            sentence.tokens.push(tok);
            offsets.push((span.start + word.start, span.start + word.end));
        }
        sentence.char_offsets = Some(offsets);
        let id = treebank.sentences.len() + 1;
        sentence.set_comment("sent_id", &id.to_string());
        sentence.set_comment("text", &collapse_whitespace(&sentence_text));
        treebank.sentences.push(sentence);
    }
    treebank
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

//! Trainable stand-ins for the tagger and parser: an averaged perceptron
//! tagger and an arc-factored structured perceptron parser.

mod averaged;
pub mod parser;
pub mod tagger;

use thiserror::Error;

use crate::delex::DelexError;

pub use parser::{parse, train_parser, ParserModel};
pub use tagger::{tag, train_tagger, TaggerModel};

pub const DEFAULT_EPOCHS: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LearnError {
    #[error("training treebank is empty")]
    EmptyTreebank,
    #[error("no token in the training data carries a UPOS tag")]
    NoTaggedTokens,
    #[error("sentence {sentence}: {message}")]
    BadSentence { sentence: usize, message: String },
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("labeler: {0}")]
    Labeler(#[from] DelexError),
}

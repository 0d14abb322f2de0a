//! Toolkit for Universal Dependencies annotation of low-resource languages.

pub mod augment;
pub mod delex;
pub mod eval;
pub mod learn;
pub mod morph;
pub mod pipeline;
pub mod project;
pub mod segment;
pub mod tagconv;
pub mod treebank;
pub mod upos;

pub use treebank::{parse_conllu, write_conllu, AnnotatedSentence, Token, Treebank};
pub use upos::Upos;

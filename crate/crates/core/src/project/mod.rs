//! Cross-lingual annotation projection: word alignment, tag voting,
//! probability-weighted edge graphs and arborescence decoding.

pub mod align;
pub mod mst;
pub mod projection;

use thiserror::Error;

pub use align::{
    align, em_step, links_tsv, log_likelihood, train_aligner, AlignmentLink, LexTable, ParallelPair,
    DEFAULT_FLOOR, NULL_WORD,
};
pub use mst::{decode_mst, decode_single_root, tree_weight, WeightedDigraph};
pub use projection::{
    build_edge_graph, filter_for_tagger, predict_labels_delex, project_corpus, project_pos,
    score_coverage, select_top_k, source_annotation, PosGroup, ProjectWhat, Projected, SourceCorpus,
    TreeGroup,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ProjectError {
    #[error("parallel corpus is empty")]
    EmptyCorpus,
    #[error("parallel pair {0} has an empty side")]
    EmptySide(usize),
    #[error("the aligner needs at least one iteration")]
    ZeroIterations,
    #[error("graph has no tokens")]
    EmptyGraph,
    #[error("groups do not share the same target sentence")]
    TargetMismatch,
    #[error("link {src}->{tgt} is out of range")]
    LinkOutOfRange { src: usize, tgt: usize },
    #[error("no source languages given")]
    NoSources,
    #[error("source {lang}: {pairs} parallel lines and {annotated} annotated sentences, expected {expected}")]
    LineCount { lang: String, pairs: usize, annotated: usize, expected: usize },
    #[error("line {line}: source {lang} annotation and parallel text disagree on token count")]
    SourceLength { line: usize, lang: String },
    #[error("lexical table line {line}: {message}")]
    Format { line: usize, message: String },
}

//! Ensembles of dependency parsers.
//!
//! Individual parsers' outputs are read from CoNLL-U files, combined by
//! minimum-Bayes-risk decoding (either the attachment-score objective with an
//! Eisner decoder or the phrasal F1 objective with a span DP), and scored with
//! a family of diversity measures that drive forward-stepwise member
//! selection.
//!
//! Vote and hit-count tables are generic over a [`Score`] scalar so that the
//! same decoders run on integers, exact rationals, or floats. Diversity and
//! selection arithmetic is generic over [`num_traits::Float`]. The aliases
//! below fix the concrete types the CLI uses.

pub mod conllu;
pub mod diversity;
pub mod dpst;
mod error;
pub mod mbr;
pub mod oracle;
mod score;
pub mod selection;
pub mod tree;
pub mod uas;

pub use error::{Error, Result};
pub use score::Score;

pub use conllu::{read_corpus, write_corpus, CorpusFile, CorpusSentence};
pub use diversity::{DiversityConfig, DiversityMetric, FleissForm, Scope};
pub use dpst::{Dpst, DpstNode, HitCountTable, Span};
pub use mbr::{aggregate_corpus, eisner_decode, MbrEnsemble, Objective, VoteTable};
pub use selection::{SelectionConfig, SelectionMethod, SelectionResult};
pub use tree::{HeadVector, ParseSet, ParserOutput, Sentence, Token, Violation};
pub use uas::AttachmentCount;

/// Exact non-negative individual weight.
pub type Weight = num_rational::Rational64;

/// Floating-point type used for reported metrics.
pub type Real = f64;

/// Vote matrix with exact rational weights.
pub type VoteMatrix = VoteTable<Weight>;

/// Phrase hit counts with exact rational weights.
pub type HitCounts = HitCountTable<Weight>;

/// Integer-scaled vote matrix, the representation the corpus aggregator decodes.
pub type IntVoteMatrix = VoteTable<i64>;

/// Selection settings over [`Real`].
pub type Selection = SelectionConfig<Real>;

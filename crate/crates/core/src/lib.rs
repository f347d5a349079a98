//! Definition Frames toolkit.
//!
//! A Definition Frame is a concept together with the terms that relate to it
//! under a fixed set of definitional relations (`IsA`, `PartOf`, `HasA`,
//! `MadeOf`, `UsedFor`, `Cause`). This crate covers the whole pipeline:
//!
//! - [`basis`]: loading a frozen word-embedding space and querying it.
//! - [`corpus`]: aligning relation triples to BIO-labelled sentences, CoNLL
//!   I/O, similarity benchmark and definition file parsing.
//! - [`tagger`]: a bidirectional LSTM relation tagger trained from scratch.
//! - [`frames`]: frame extraction, encoding to a `k x d` matrix and decoding.
//! - [`sim_eval`]: Spearman correlation, permutation p-values, k-fold splits.
//! - [`transform`]: learning a linear map `W x DF + b` against gold similarity.

pub mod basis;
pub mod corpus;
mod error;
pub mod frames;
mod linalg;
pub mod sim_eval;
pub mod tagger;
pub mod transform;

pub use basis::BasisStore;
pub use corpus::{BioLabel, Relation, TaggedSentence, Token};
pub use error::{Error, Result};
pub use frames::{DefinitionFrame, EncodedFrame, Row, RowMask};
pub use tagger::{TaggerConfig, TaggerModel};
pub use transform::LinearTransform;

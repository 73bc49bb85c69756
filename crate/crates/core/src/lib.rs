//! Toolkit for code-format event extraction.
//!
//! The pipeline runs: load an [`ontology`], ingest a [`corpus`] split, draw
//! low-data subsets, generate annotation [`guidelines`] through the
//! [`llmgate`] client, build instruction-tuning files with [`sampling`] and
//! [`codefmt`], then parse and score model generations with [`parse_eval`]
//! and summarize them with [`report`].

pub mod codefmt;
pub mod corpus;
pub mod error;
pub mod guidelines;
pub mod llmgate;
pub mod ontology;
pub mod parse_eval;
pub mod pylit;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod variant;

pub use error::{Error, ErrorKind, Result};
pub use ontology::{EventTypeDef, Ontology, RoleDef};
pub use variant::Variant;

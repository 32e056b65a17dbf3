//! Concept-based zero-shot video event retrieval over an event ontology.
//!
//! An [`ontology::OntologyTree`] organizes events under categories and
//! concepts under events. A text query is matched to events and then to
//! concepts; videos are ranked by the mean score of the matched concepts in
//! a precomputed [`corpus::ScoreMatrix`].

pub mod cli;
pub mod corpus;
pub mod discovery;
pub mod error;
pub mod evaluation;
pub mod matching;
pub mod models;
pub mod ontology;
pub mod ranking;
pub mod scoring;
pub mod service;
pub mod similarity;
pub mod synthetic;

pub use error::{Error, Result};
pub use matching::{match_concepts, MatchQuery, MatchResult};
pub use ontology::{NodeId, NodeKind, OntologyTree};
pub use ranking::{RankedList, Scored};

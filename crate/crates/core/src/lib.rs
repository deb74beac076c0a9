//! Builds a knowledge base of entity-oriented search intents from query
//! suggestions: refiners are mined per entity type, categorized, clustered
//! into intent profiles and written as confidence-weighted quadruples.
//!
//! The `examples/` directory walks through each stage; [`pipeline`] runs
//! them end to end over files.

pub mod acquisition;
pub mod builder;
pub mod categorizer;
pub mod clustering;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod kb;
pub mod pipeline;

pub use error::{Error, Result};

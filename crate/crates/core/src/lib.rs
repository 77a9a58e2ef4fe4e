//! Toolkit for building synthetic parallel corpora from a document-structured
//! source corpus: translation batches, segmentation, language filtering,
//! length-based sentence alignment, pivot projection across languages, and
//! the evaluation statistics used to judge the result.

pub mod align;
pub mod annotation;
pub mod batch;
pub mod corpus;
pub mod error;
pub mod evalstats;
pub mod metrics;
pub mod pivot;
pub mod prep;

pub use error::{Error, ErrorClass, Result};

//! Seeded temporal topic modeling for monitoring PHQ-9 depressive symptoms
//! in timestamped short-text streams.
//!
//! The pipeline: [`corpus`] normalizes and buckets documents per subject,
//! [`lexicon`] and [`sentiment`] derive a personalized seed set,
//! [`model`] runs seed-constrained collapsed Gibbs sampling and turns the
//! bucket/topic distribution into masked symptom trends and labels,
//! [`coherence`] scores the learned topics and [`eval`] measures
//! bucket-level label quality.

pub mod coherence;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod lexicon;
pub mod model;
pub mod pipeline;
pub mod sentiment;
pub mod symptom;

pub use error::{Error, Result};
pub use symptom::{Symptom, SymptomSet};

//! Procedural word and sequence task benchmarks.
//!
//! * [`algebra`]: task expressions, their types, map-filter normal form and
//!   enumeration of depth-two compositions.
//! * [`knowledge`]: lexical, factual and random backends, the expression
//!   interpreter, and SPARQL compilation/execution for factual tasks.
//! * [`forge`]: dataset synthesis, splits, sequence sampling, balanced
//!   union datasets and deterministic serialization.
//! * [`eval`]: per-token accuracy with segmentation alignment, adaptability,
//!   probability-mass analysis and composition regressions.
//! * [`fixtures`]: small bundled stores.

pub mod algebra;
pub mod knowledge;
pub mod fixtures;
pub mod forge;
pub mod eval;

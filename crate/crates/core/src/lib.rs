//! Static safety analysis for a multi-package corpus.
//!
//! The pipeline: parse mini-language packages into a facts model, resolve
//! names and classify calls, build an extended call graph whose nodes pair a
//! function with a substitution of its generic parameters, propagate
//! unsafety backwards through the graph under conservative and optimistic
//! resolutions of statically unknowable calls, and compute corpus-level
//! metrics over the results.

pub mod analysis;
pub mod frontend;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod synth;

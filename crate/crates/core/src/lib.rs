//! Hyperbolic hierarchical attribution for text classifiers.
//!
//! Token embeddings are projected into Poincaré balls by two trained probes
//! (one label-aware, one syntactic), token and coalition contributions are
//! estimated against a black-box probability oracle, and a hierarchy over the
//! tokens is built greedily from a priority queue of pair weights.

pub mod attribution;
pub mod cli;
pub mod evaluation;
pub mod geometry;
pub mod hierarchy;
pub mod io;
pub mod optim;
pub mod probes;
pub mod stats;
pub mod synth;

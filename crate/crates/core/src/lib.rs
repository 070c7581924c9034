//! Unlabeled dependency parsing built around three shift-reduce transition
//! systems (arc-standard, arc-hybrid, arc-eager) scored with two positional
//! bi-LSTM features.
//!
//! The minimal `{s0, b0}` feature set makes the arc-hybrid and arc-eager
//! search spaces tabular: [`chart`] holds exact O(n^3) Viterbi decoders and
//! their cost-augmented variants, which in turn enable global max-margin
//! training in [`train`]. [`graph`] provides the edge-factored projective
//! decoder and constructive reductions relating it to the arc-eager model.
//! Everything score-related is grounded by the exhaustive enumeration
//! oracles in [`bruteforce`].

pub mod bruteforce;
pub mod chart;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod neural;
pub mod par;
pub mod selftest;
pub mod toy;
pub mod train;
pub mod transition;

pub use error::{Error, Result};

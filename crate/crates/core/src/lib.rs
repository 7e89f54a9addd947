//! Link-popularity analytics for hyperlink networks with aggregated click data.
//!
//! The crate ingests a directed link graph and per-link transition counts,
//! computes link features (network centralities, semantic similarity, page
//! position), and offers four analyses on top of them:
//!
//! * [`attention`]: how concentrated clicks are on few links,
//! * [`hurdle`]: two-stage regression of link usage on single features,
//! * [`hyptrails`]: Bayesian comparison of navigation hypotheses for a
//!   first-order Markov chain,
//! * [`wpr`]: hypothesis-weighted PageRank evaluated against observed traffic.

// NaN-rejecting guards are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attention;
pub mod error;
pub mod graph;
pub mod hurdle;
pub mod hyptrails;
pub mod ingest;
pub mod optim;
pub mod semantics;
pub mod wpr;

pub use error::{Error, Result};
pub use graph::{CentralityVector, LinkGraph, Measure, PageRankConfig};

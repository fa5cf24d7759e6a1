//! Audit toolkit for strategic reachability in score-based recommenders.
//!
//! The library covers the full audit pipeline: rating ingestion, desk-scale
//! preference models (matrix factorization, item neighborhoods, ridge
//! autoencoders), per-user affine score updates, a box-constrained convex
//! solver for maximum recommendation probability under strategic rating
//! edits, and the derived access metrics (lift, rank gain, discovery,
//! availability) with bias correlation tables.

pub mod actions;
pub mod audit;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod ingest;
pub mod metrics;
pub mod models;
pub mod selection;
pub mod solver;

pub use error::{Error, Result};

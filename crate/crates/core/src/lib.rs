//! Ownership/contribution alignment and technical debt density mining.
//!
//! The crate turns exported development records (git numstat logs, pull
//! requests, tickets, static-analysis issues, team affiliations) into weekly
//! per-component series, then runs a nonparametric analysis over them:
//! Shapiro-Wilk for documentation, Mann-Whitney U across team-split
//! boundaries, and Kendall tau-b with a magnitude label per segment.

pub mod ingest;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod stats;
pub mod synth;

mod fsutil;

pub use fsutil::write_atomic;

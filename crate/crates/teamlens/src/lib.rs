//! Analysis engine for software-team interaction traces.
//!
//! Converts raw traces (messages, commits, work logs, task assignments) into
//! per-sprint social networks, computes structural metrics on them
//! (betweenness centrality, triad census, transitivity, density), scores
//! socio-technical congruence against coordination requirements mined from
//! commits, flags communication anti-patterns, and emits deterministic
//! machine-readable reports.
//!
//! The typical flow is:
//!
//! 1. [`ingest`] parses event-line traces or commit logs and slices events
//!    into sprint windows.
//! 2. [`graph`] builds weighted [`graph::SocialNetwork`]s per source and
//!    merges them.
//! 3. [`metrics`] and [`congruence`] compute the per-sprint numbers.
//! 4. [`diagnostics`] turns those into findings and recommendations.
//! 5. [`report`] serializes everything canonically; [`stats`] relates metric
//!    series to outcome series across sprints.
//!
//! [`pipeline`] wires the whole thing together for the `teamlens` CLI.

pub mod config;
pub mod congruence;
pub mod diagnostics;
pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod stats;

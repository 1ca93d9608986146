//! Slotted-time gossip simulator and analytics toolbox for decentralized
//! in-network computation of asymmetric functions over binary-tree schemas.
//!
//! A network of nodes runs a push-gossip protocol: in every time slot each
//! node forwards at most one queued packet to a uniformly random neighbour.
//! Source nodes inject operand packets in rounds; packets carrying sibling
//! operands of the same round are combined according to a binary-tree
//! computation schema until the root result reaches a sink node. Two
//! computation models are supported: `fixed` (every internal tree node is
//! pinned to a designated network node) and `flexible` (any node may combine
//! matching packets it happens to hold).
//!
//! Alongside the simulator, [`analytics`] computes the random-walk quantities
//! that govern achievable injection rates and latency: spectral gap,
//! stationary distribution, hitting and mixing times, the fundamental-matrix
//! diagonal, min-cut rate ceilings, and closed-form rate/latency bounds.
//! [`experiments`] layers stability probing, critical-rate bisection and
//! latency measurement on top.
//!
//! The primary interface is the `examples/` directory (one runnable example
//! per capability, `cargo run --example <name>`):
//!
//! * `topology_tour` — build every supported graph family, print diagnostics
//! * `schema_playground` — complete and expression-parsed schemas, reference evaluation
//! * `simulate_fixed` / `simulate_flexible` — end-to-end simulation runs
//! * `walk_analytics` — spectra, hitting/mixing times, fundamental matrix
//! * `rate_bounds` — spectral lower bound vs. min-cut ceiling per family
//! * `stability_probe` / `beta_star_search` — verdicts and critical-rate bisection
//! * `latency_scaling` — completion-latency growth with graph size
//! * `clock_drift` — desynchronised arrival clocks
//!
//! A thin `randcompute` binary exposes the same flows as `analyze`,
//! `simulate`, `sweep` and `verify` subcommands driven by a TOML config.

#![forbid(unsafe_code)]

pub mod analytics;
pub mod cli;
pub mod config;
pub mod engine;
pub mod experiments;
pub mod report;
pub mod schema;
pub mod seeds;
pub mod topology;
pub mod verify;

pub use self::{
    engine::{Metrics, Mode, SimState},
    schema::{SchemaNodeId, SchemaTree},
    topology::{Graph, TransitionMatrix},
};

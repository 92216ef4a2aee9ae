//! Robustness and resilience simulation for rail and water freight networks.
//!
//! The library is organised bottom-up:
//!
//! - [`network`]: node/edge tables and the immutable [`FreightNetwork`].
//! - [`centrality`]: degree, closeness and betweenness scores and rankings.
//! - [`climate`]: hot-day counts, period deltas and model-ensemble statistics.
//! - [`disruption`]: removal orders for random, targeted and hot-day scenarios.
//! - [`metrics`]: replay of removal orders into SCF and tonnage curves.
//! - [`synth`], [`plot`], [`pipeline`]: synthetic inputs, SVG rendering and
//!   the end-to-end run that writes a report bundle.

pub mod centrality;
pub mod climate;
pub mod disruption;
pub mod metrics;
pub mod network;
pub mod pipeline;
pub mod plot;
pub mod rng;
pub mod synth;

pub use network::{FreightNetwork, Mode, NodeId, NodeRecord, Tonnage};

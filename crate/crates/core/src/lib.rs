//! Power-law-degree stochastic block model.
//!
//! Edge probabilities are block connectivities raised to a per-pair power
//! `1 + delta_i + delta_j`, where each node's decay `delta_i` has an
//! exponential prior. Small decays produce hubs, which lets the model fit
//! heavy-tailed degree distributions inside each community.

#![allow(clippy::needless_range_loop)]

pub mod evaluation;
pub mod generators;
pub mod graph;
pub mod harness;
pub mod inference;
pub mod model;
pub mod model_selection;
pub mod rng;

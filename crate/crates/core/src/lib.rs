//! Reflected Brownian motion in narrow tubes around a metric graph.
//!
//! The domain is a union of thin cylinders of radius `lambda_k * eps` around
//! the edges and balls of radius `r_j(eps) = c_j * eps^beta_j` around the
//! vertices. The crate simulates the reflected process in that domain,
//! measures exit places and times, and compares them with the graph-level
//! limits: the exit law at a vertex, the absorbing chains of intermediate time
//! scales and the continuous-time chain of the first critical scale.
//!
//! * [`graph`]: metric graphs and graph points.
//! * [`geometry`]: the tube domain, projections onto the graph, cross-sections.
//! * [`sde`]: the reflected Euler walker, exits, cycles, ensembles.
//! * [`stats`]: exit statistics and goodness-of-fit tests.
//! * [`limits`]: closed-form and linear-algebra limit objects.
//! * [`predictor`]: Monte Carlo observables against the limit predictions.
//! * [`harness`]: TOML configs, campaign runners, report files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod graph;
pub mod harness;
pub mod limits;
pub mod predictor;
pub mod sde;
pub mod stats;
pub mod vec3;

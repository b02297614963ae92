//! Simulation and verification toolkit for stochastic functional
//! differential equations: segment-valued states, a model zoo, seeded
//! Euler–Maruyama ensembles, drift-condition scanners, Lyapunov checks and
//! empirical Wasserstein convergence diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod assignment;
pub mod conditions;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod lyapunov;
pub mod metrics;
pub mod models;
pub mod segment;

pub use error::{Error, Result};
pub use segment::{d_rho, Grid, Segment, SegmentView};

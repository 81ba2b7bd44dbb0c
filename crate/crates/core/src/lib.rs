//! Desk-scale laboratory for airborne vertical collision avoidance logic.
//!
//! The crate is organized bottom-up:
//!
//! - [`airspace`]: shared domain types, geometry and safety-event predicates.
//! - [`dynamics`]: point-mass vertical kinematics and pilot response models.
//! - [`tcas`]: a simplified TCAS baseline (threat detection, sense/strength
//!   selection, multithreat arbitration).
//! - [`optimizer`]: the vertical MDP on a discretized grid, solved by backward
//!   induction into a [`optimizer::LogicTable`].
//! - [`qmdp`]: online execution of the table (multilinear interpolation,
//!   belief-weighted action values, online costs, coordination, utility fusion).
//! - [`encounter`]: Bayesian-network encounter models.
//! - [`evaluation`]: closed-loop simulation, Monte Carlo metrics, importance
//!   sampling and cross-entropy proposal adaptation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airspace;
pub mod dynamics;
pub mod encounter;
pub mod error;
pub mod evaluation;
pub mod optimizer;
pub mod qmdp;
pub mod tcas;

pub use error::{Error, Result};

/// Feet per second in one foot per minute.
pub const FPM: f64 = 1.0 / 60.0;

/// Standard gravity, ft/s².
pub const G_FT: f64 = 32.174;

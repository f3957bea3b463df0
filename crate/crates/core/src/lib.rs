//! Bidirectional pedestrian flow in a corridor, at two levels of description.
//!
//! - [`lattice`]: an exclusion process where reds walk right and blues walk
//!   left, with cohesion and sidestepping rates, evolved through its master
//!   equation or sampled directly.
//! - [`pde`]: the cross-diffusion system obtained in the small-spacing limit,
//!   solved by an explicit finite-volume scheme or an implicit scheme in
//!   entropy variables.
//! - [`stationary`]: steady lane profiles across the corridor.
//! - [`diagnostics`]: entropy balance, lane classification and micro/macro
//!   comparison.
//!
//! Arrays are indexed `[i, j]` with `i` along the corridor (periodic) and `j`
//! across it (walls at both ends).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod lattice;
pub mod model;
pub mod pde;
pub mod stationary;
pub mod stencil;

pub use config::{Scenario, ScenarioConfig};
pub use error::{Error, ParamViolation, Result};
pub use model::{make_initial, validate_params, EntropyState, Grid, InitialCondition, ModelParams, State};
pub use pde::{Scheme, SolverConfig, Variant};

//! Continuum cross-diffusion model on the corridor.
//!
//! The explicit finite-volume stepper supports every flux variant; the implicit
//! stepper works in entropy variables and uses the symmetric reduced model.

mod driver;
mod entropy;
mod explicit;
mod flux;
mod implicit;
mod mobility;

use serde::{Deserialize, Serialize};

pub use driver::{run_pde, PdeRun};
pub use entropy::{entropy_to_primal, entropy_vars, hessian_inverse, primal_from_entropy, primal_to_entropy};
pub use explicit::{stability_dt, step_explicit, ExplicitStepper};
pub use flux::{compute_fluxes, FluxField};
pub use implicit::{implicit_residual, step_implicit_entropy, ImplicitReport};
pub use mobility::{assemble_g_h, assemble_m, min_symmetric_eigenvalue, MobilityMatrices};

/// Which flux model to evolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Every drift and cross-diffusion term, including the mixed x/y dodge term.
    #[default]
    Full,
    /// Equal dodge rates and no cohesion; requires `gamma1 == gamma2` and `alpha == 0`.
    ReducedSym,
    /// Lateral drift with coefficient `h` and no mixed term.
    DodgeScaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    Explicit,
    ImplicitEntropy,
}

fn default_tau() -> f64 {
    1e-3
}
fn default_cfl() -> f64 {
    0.9
}
fn default_fp_tol() -> f64 {
    1e-10
}
fn default_fp_maxiter() -> usize {
    200
}
fn default_clip() -> f64 {
    1e-10
}

/// Solver selection and tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub variant: Variant,
    /// Explicit step; `None` uses the stability bound.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Implicit step, also the default regularization weight.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default = "default_fp_tol")]
    pub fp_tol: f64,
    #[serde(default = "default_fp_maxiter")]
    pub fp_maxiter: usize,
    #[serde(default = "default_clip")]
    pub clip_eps: f64,
    /// Overrides the regularization weight of the implicit scheme.
    #[serde(default)]
    pub regularization: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::default(),
            variant: Variant::default(),
            dt: None,
            tau: default_tau(),
            cfl_safety: default_cfl(),
            fp_tol: default_fp_tol(),
            fp_maxiter: default_fp_maxiter(),
            clip_eps: default_clip(),
            regularization: None,
        }
    }
}

impl SolverConfig {
    pub fn explicit(variant: Variant) -> Self {
        Self { variant, ..Self::default() }
    }

    pub fn implicit(tau: f64) -> Self {
        Self { scheme: Scheme::ImplicitEntropy, variant: Variant::ReducedSym, tau, ..Self::default() }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::Config(m.to_string()));
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("solver.dt must be positive");
            }
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("solver.tau must be positive");
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad("solver.cfl_safety must lie in (0, 1]");
        }
        if !(self.fp_tol > 0.0) {
            return bad("solver.fp_tol must be positive");
        }
        if self.fp_maxiter == 0 {
            return bad("solver.fp_maxiter must be at least 1");
        }
        if !(self.clip_eps >= 0.0 && self.clip_eps < 0.5) {
            return bad("solver.clip_eps must lie in [0, 1/2)");
        }
        if let Some(w) = self.regularization {
            if !(w >= 0.0 && w.is_finite()) {
                return bad("solver.regularization must be nonnegative");
            }
        }
        if self.scheme == Scheme::ImplicitEntropy && self.variant != Variant::ReducedSym {
            return bad("the implicit scheme runs the reduced-sym variant only");
        }
        Ok(())
    }
}

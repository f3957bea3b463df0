use ndarray::Array2;

use super::flux::{fluxes_into, Coefficients};
use super::{FluxField, SolverConfig, Variant};
use crate::error::{Error, Result};
use crate::model::{Grid, ModelParams, State};
use crate::stencil::divergence_into;

const BOX_TOL: f64 = 1e-12;

/// Largest stable forward-Euler step for the finite-volume scheme.
///
/// Each term bounds the rate at which one cell can lose its own mass, taken
/// over the whole admissible box, and the rates add:
/// - x drift: `(1 - rho)(1 + alpha r) <= 1 + alpha`, over `dx`;
/// - x cross-diffusion: each face removes at most `(h / 2dx)(1 + alpha / 4)`
///   per unit density since `r (1 - rho) <= 1/4`, two faces over `dx`;
/// - y drift: `|kappa| b (1 - rho) <= |kappa|`, over `dy`;
/// - y diffusion: `h gamma0 (1 - b)` plus the dodge term `h (gamma1 + gamma2) b (1 - rho) / 2`,
///   two faces over `dy^2`;
/// - the mixed term is bounded by `h |mixed| / (dx dy)`.
pub fn stability_dt(p: &ModelParams, grid: &Grid, variant: Variant, cfl_safety: f64) -> Result<f64> {
    let c = Coefficients::new(p, variant)?;
    Ok(stability_dt_for(&c, grid, cfl_safety))
}

pub(crate) fn stability_dt_for(c: &Coefficients, grid: &Grid, cfl_safety: f64) -> f64 {
    let (dx, dy) = (grid.dx(), grid.dy());
    let rate = (1.0 + c.alpha) / dx
        + c.h * (1.0 + 0.25 * c.alpha) / (dx * dx)
        + c.kappa.abs() / dy
        + c.h * (2.0 * c.gamma0 + c.gsum) / (dy * dy)
        + c.h * c.mixed.abs() / (dx * dy);
    cfl_safety / rate
}

/// Reusable buffers for repeated explicit steps on one grid.
pub struct ExplicitStepper {
    coeff: Coefficients,
    grid: Grid,
    flux: FluxField,
    div_r: Array2<f64>,
    div_b: Array2<f64>,
    dt_max: f64,
}

impl ExplicitStepper {
    pub fn new(p: &ModelParams, grid: &Grid, variant: Variant, cfl_safety: f64) -> Result<Self> {
        grid.validate()?;
        let coeff = Coefficients::new(p, variant)?;
        let (nx, ny) = grid.shape();
        Ok(Self {
            coeff,
            grid: *grid,
            flux: FluxField::zeros(nx, ny),
            div_r: Array2::zeros((nx, ny)),
            div_b: Array2::zeros((nx, ny)),
            dt_max: stability_dt_for(&coeff, grid, cfl_safety),
        })
    }

    pub fn dt_max(&self) -> f64 {
        self.dt_max
    }

    pub fn fluxes(&self) -> &FluxField {
        &self.flux
    }

    /// Advances `s` by `dt` in place.
    pub fn step(&mut self, s: &mut State, dt: f64) -> Result<()> {
        if dt > self.dt_max * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, dt_max: self.dt_max });
        }
        if s.shape() != self.grid.shape() {
            return Err(Error::Mismatch(format!("state {:?} vs grid {:?}", s.shape(), self.grid.shape())));
        }
        let (dx, dy) = (self.grid.dx(), self.grid.dy());
        fluxes_into(s, &self.coeff, &self.grid, &mut self.flux);
        divergence_into(&self.flux.jr_x, &self.flux.jr_y, dx, dy, &mut self.div_r);
        divergence_into(&self.flux.jb_x, &self.flux.jb_y, dx, dy, &mut self.div_b);
        s.r.scaled_add(-dt, &self.div_r);
        s.b.scaled_add(-dt, &self.div_b);
        s.t += dt;
        clip_round_off(s)
    }
}

/// Pulls round-off excursions back into the box; anything larger is an error.
fn clip_round_off(s: &mut State) -> Result<()> {
    let (nx, ny) = s.shape();
    for i in 0..nx {
        for j in 0..ny {
            let (mut r, mut b) = (s.r[[i, j]], s.b[[i, j]]);
            if !(r >= -BOX_TOL && b >= -BOX_TOL && r + b <= 1.0 + BOX_TOL) {
                return Err(Error::Box { i, j, r, b, rho: r + b });
            }
            if r < 0.0 || b < 0.0 || r + b > 1.0 {
                log::debug!("clipping round-off at ({i}, {j}): r = {r:e}, b = {b:e}");
                r = r.max(0.0);
                b = b.max(0.0);
                let rho = r + b;
                if rho > 1.0 {
                    r /= rho;
                    b /= rho;
                }
                s.r[[i, j]] = r;
                s.b[[i, j]] = b;
            }
        }
    }
    Ok(())
}

/// One forward-Euler finite-volume step with `cfg.dt`, or the stability bound if unset.
pub fn step_explicit(s: &State, p: &ModelParams, grid: &Grid, cfg: &SolverConfig) -> Result<State> {
    let mut stepper = ExplicitStepper::new(p, grid, cfg.variant, cfg.cfl_safety)?;
    let dt = cfg.dt.unwrap_or(stepper.dt_max());
    let mut out = s.clone();
    stepper.step(&mut out, dt)?;
    Ok(out)
}

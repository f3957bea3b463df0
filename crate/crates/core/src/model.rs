//! Shared domain types: coefficients, the corridor grid, density states and
//! initial-condition descriptors.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, ParamViolation, Result};

/// Coefficients of the lattice model and its continuum limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Lattice spacing, which also scales every diffusive term.
    pub h: f64,
    /// Unconditional lateral jump rate.
    pub gamma0: f64,
    /// Dodge rate towards decreasing y for reds (increasing y for blues).
    pub gamma1: f64,
    /// Dodge rate towards increasing y for reds (decreasing y for blues).
    pub gamma2: f64,
    /// Cohesion boost for forward jumps.
    pub alpha: f64,
}

impl ModelParams {
    pub fn new(h: f64, gamma0: f64, gamma1: f64, gamma2: f64, alpha: f64) -> Self {
        Self { h, gamma0, gamma1, gamma2, alpha }
    }

    /// Symmetric-dodge parameters with no cohesion.
    pub fn symmetric(h: f64, gamma0: f64, gamma: f64) -> Self {
        Self::new(h, gamma0, gamma, gamma, 0.0)
    }

    pub fn gamma_max(&self) -> f64 {
        self.gamma1.max(self.gamma2)
    }

    pub fn gamma_sum(&self) -> f64 {
        self.gamma1 + self.gamma2
    }

    pub fn validate(&self) -> Result<()> {
        validate_params(self).map_err(Error::Params)
    }
}

/// Checks every coefficient bound and names each one that fails.
pub fn validate_params(p: &ModelParams) -> std::result::Result<(), Vec<ParamViolation>> {
    let mut out = Vec::new();
    if !(p.h > 0.0 && p.h.is_finite()) {
        out.push(ParamViolation { name: "h", value: p.h, bound: "h > 0" });
    }
    let unit = [("gamma0", p.gamma0), ("gamma1", p.gamma1), ("gamma2", p.gamma2)];
    for (name, value) in unit {
        if !(0.0..=1.0).contains(&value) {
            out.push(ParamViolation { name, value, bound: "0 <= gamma <= 1" });
        }
    }
    if !(0.0..=0.5).contains(&p.alpha) {
        out.push(ParamViolation { name: "alpha", value: p.alpha, bound: "0 <= alpha <= 1/2" });
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

fn default_x_max() -> f64 {
    1.0
}

fn default_y_max() -> f64 {
    0.1
}

/// Cell-centred rectangular grid, periodic in x and walled in y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub x_min: f64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default)]
    pub y_min: f64,
    #[serde(default = "default_y_max")]
    pub y_max: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        let g = Self { nx, ny, x_min: x.0, x_max: x.1, y_min: y.0, y_max: y.1 };
        g.validate()?;
        Ok(g)
    }

    /// The unit corridor `[0,1] x [0,0.1]`.
    pub fn corridor(nx: usize, ny: usize) -> Self {
        Self { nx, ny, x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 0.1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Config(format!("grid needs nx, ny >= 1, got {}x{}", self.nx, self.ny)));
        }
        let ok = |a: f64, b: f64| a.is_finite() && b.is_finite() && b > a;
        if !ok(self.x_min, self.x_max) || !ok(self.y_min, self.y_max) {
            return Err(Error::Config("grid extents must be finite with min < max".into()));
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + (j as f64 + 0.5) * self.dy()
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

/// Red and blue densities on a grid at time `t`. Arrays are indexed `[i, j]`
/// with `i` along the corridor.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub r: Array2<f64>,
    pub b: Array2<f64>,
    pub t: f64,
}

impl State {
    pub fn zeros(grid: &Grid) -> Self {
        Self { r: Array2::zeros(grid.shape()), b: Array2::zeros(grid.shape()), t: 0.0 }
    }

    pub fn constant(grid: &Grid, c_r: f64, c_b: f64) -> Self {
        Self {
            r: Array2::from_elem(grid.shape(), c_r),
            b: Array2::from_elem(grid.shape(), c_b),
            t: 0.0,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.r.dim()
    }

    pub fn rho(&self) -> Array2<f64> {
        &self.r + &self.b
    }

    pub fn mass_r(&self, grid: &Grid) -> f64 {
        self.r.sum() * grid.cell_area()
    }

    pub fn mass_b(&self, grid: &Grid) -> f64 {
        self.b.sum() * grid.cell_area()
    }

    /// First cell (in row-major order) leaving `0 <= r, b` and `r + b <= 1` by more than `tol`.
    pub fn box_violation(&self, tol: f64) -> Option<(usize, usize)> {
        let (nx, ny) = self.shape();
        for i in 0..nx {
            for j in 0..ny {
                let (r, b) = (self.r[[i, j]], self.b[[i, j]]);
                let bad = !(r >= -tol && b >= -tol && r + b <= 1.0 + tol);
                if bad {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn check_box(&self, tol: f64) -> Result<()> {
        match self.box_violation(tol) {
            None => Ok(()),
            Some((i, j)) => {
                let (r, b) = (self.r[[i, j]], self.b[[i, j]]);
                Err(Error::Box { i, j, r, b, rho: r + b })
            }
        }
    }

    pub fn min_r(&self) -> f64 {
        self.r.fold(f64::INFINITY, |m, &x| m.min(x))
    }

    pub fn min_b(&self) -> f64 {
        self.b.fold(f64::INFINITY, |m, &x| m.min(x))
    }

    pub fn max_rho(&self) -> f64 {
        self.rho().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
    }
}

/// Entropy-variable fields dual to a [`State`]. The conversion needs the grid
/// and `h` because the drift potentials depend on x.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyState {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
}

/// Initial-condition descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Constant { c_r: f64, c_b: f64 },
    /// `c_r + a sin(pi x) cos(pi (y - y_min) / height)` for reds, minus the
    /// same perturbation for blues.
    Sinusoidal { c_r: f64, c_b: f64, amplitude: f64 },
    /// Explicit cell values, indexed `[i][j]`.
    Table { r: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
}

/// Samples the descriptor at cell centres.
pub fn make_initial(desc: &InitialCondition, grid: &Grid) -> Result<State> {
    grid.validate()?;
    let (nx, ny) = grid.shape();
    let mut s = State::zeros(grid);
    match desc {
        InitialCondition::Constant { c_r, c_b } => {
            s.r.fill(*c_r);
            s.b.fill(*c_b);
        }
        InitialCondition::Sinusoidal { c_r, c_b, amplitude } => {
            for i in 0..nx {
                for j in 0..ny {
                    let phase = (grid.y(j) - grid.y_min) / grid.height();
                    let p = amplitude * (PI * grid.x(i)).sin() * (PI * phase).cos();
                    s.r[[i, j]] = c_r + p;
                    s.b[[i, j]] = c_b - p;
                }
            }
        }
        InitialCondition::Table { r, b } => {
            let fits = |t: &Vec<Vec<f64>>| t.len() == nx && t.iter().all(|row| row.len() == ny);
            if !fits(r) || !fits(b) {
                return Err(Error::Config(format!("table initial condition must be {nx}x{ny}")));
            }
            for i in 0..nx {
                for j in 0..ny {
                    s.r[[i, j]] = r[i][j];
                    s.b[[i, j]] = b[i][j];
                }
            }
        }
    }
    if let Some((i, j)) = s.box_violation(0.0) {
        return Err(Error::InitialRange { i, j, r: s.r[[i, j]], b: s.b[[i, j]] });
    }
    Ok(s)
}

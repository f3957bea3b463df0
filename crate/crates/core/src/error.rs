use thiserror::Error;

/// A single out-of-range parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamViolation {
    pub name: &'static str,
    pub value: f64,
    pub bound: &'static str,
}

impl std::fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} = {} violates {}", self.name, self.value, self.bound)
    }
}

fn join(v: &[ParamViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {}", join(.0))]
    Params(Vec<ParamViolation>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("initial condition out of range at cell ({i}, {j}): r = {r}, b = {b}")]
    InitialRange { i: usize, j: usize, r: f64, b: f64 },

    #[error("box violation at cell ({i}, {j}): r = {r}, b = {b}, rho = {rho}")]
    Box { i: usize, j: usize, r: f64, b: f64, rho: f64 },

    #[error("time step {dt} exceeds the stability bound {dt_max}")]
    Cfl { dt: f64, dt_max: f64 },

    #[error("state leaves the admissible set at cell ({i}, {j}): r = {r}, b = {b}")]
    NotInterior { i: usize, j: usize, r: f64, b: f64 },

    #[error("entropy variables overflow at cell ({i}, {j}): u = {u}, v = {v}")]
    Overflow { i: usize, j: usize, u: f64, v: f64 },

    #[error("fixed-point iteration did not converge in {iters} iterations (last update {last_update:e}, residual {residual:e})")]
    NoConvergence { iters: usize, last_update: f64, residual: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("singular stationary system at r = {r}, b = {b}")]
    Singular { r: f64, b: f64 },

    #[error("no bracketing interval: {0}")]
    NoBracket(String),

    #[error("shape mismatch: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use super::explicit::ExplicitStepper;
use super::implicit::step_implicit_entropy;
use super::{Scheme, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{Grid, ModelParams, State};

/// Outcome of [`run_pde`].
#[derive(Debug, Clone)]
pub struct PdeRun {
    pub state: State,
    pub steps: u64,
    /// Nominal step: the explicit `dt` or the implicit `tau`.
    pub dt: f64,
    /// Total fixed-point iterations (implicit scheme only).
    pub iterations: u64,
}

/// Integrates from `s0` to `t_end`. `observe` sees the initial state, the state
/// at every multiple of `every` below `t_end`, and the final state. Steps are
/// shortened uniformly within each interval so emission times are hit exactly.
pub fn run_pde<F>(
    s0: &State,
    p: &ModelParams,
    grid: &Grid,
    cfg: &SolverConfig,
    t_end: f64,
    every: Option<f64>,
    mut observe: F,
) -> Result<PdeRun>
where
    F: FnMut(&State, u64) -> Result<()>,
{
    cfg.validate()?;
    if !(t_end >= s0.t && t_end.is_finite()) {
        return Err(Error::Config(format!("t_end = {t_end} precedes the start time {}", s0.t)));
    }
    if let Some(e) = every {
        if !(e > 0.0) {
            return Err(Error::Config("output.every must be positive".into()));
        }
    }
    let mut explicit = match cfg.scheme {
        Scheme::Explicit => Some(ExplicitStepper::new(p, grid, cfg.variant, cfg.cfl_safety)?),
        Scheme::ImplicitEntropy => None,
    };
    let nominal = match &explicit {
        Some(st) => {
            let dt_max = st.dt_max();
            match cfg.dt {
                Some(dt) if dt > dt_max * (1.0 + 1e-12) => return Err(Error::Cfl { dt, dt_max }),
                Some(dt) => dt,
                None => dt_max,
            }
        }
        None => cfg.tau,
    };

    let mut targets = Vec::new();
    if let Some(e) = every {
        let mut k = 1u64;
        while s0.t + k as f64 * e < t_end * (1.0 - 1e-12) {
            targets.push(s0.t + k as f64 * e);
            k += 1;
        }
    }
    targets.push(t_end);

    let mut s = s0.clone();
    let mut steps = 0u64;
    let mut iterations = 0u64;
    observe(&s, 0)?;
    for target in targets {
        let span = target - s.t;
        if span <= 0.0 {
            continue;
        }
        let n = ((span / nominal) * (1.0 - 1e-12)).ceil().max(1.0) as u64;
        let dt = span / n as f64;
        for k in 0..n {
            match explicit.as_mut() {
                Some(st) => st.step(&mut s, dt)?,
                None => {
                    let c = SolverConfig { tau: dt, ..*cfg };
                    let (next, rep) = step_implicit_entropy(&s, p, grid, &c)?;
                    iterations += rep.iterations as u64;
                    s = next;
                }
            }
            steps += 1;
            if k + 1 == n {
                s.t = target;
            }
        }
        observe(&s, steps)?;
    }
    Ok(PdeRun { state: s, steps, dt: nominal, iterations })
}

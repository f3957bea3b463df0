use serde::Serialize;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::lattice::{evolve_lattice, grid_matches_spacing, steps_for_time, LatticeState};
use crate::model::{make_initial, Grid, InitialCondition, ModelParams, State};
use crate::pde::{run_pde, SolverConfig};

/// Distance between the lattice and continuum fields at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareRow {
    pub t: f64,
    pub l2: f64,
    pub sup: f64,
}

/// L2 and sup distances at each shared output time. Both trajectories must
/// have the same number of snapshots, the same shapes and matching times.
pub fn compare_micro_macro(lattice: &[State], pde: &[State], grid: &Grid) -> Result<Vec<CompareRow>> {
    if lattice.len() != pde.len() {
        return Err(Error::Mismatch(format!("{} lattice snapshots vs {} continuum snapshots", lattice.len(), pde.len())));
    }
    lattice
        .iter()
        .zip(pde)
        .map(|(a, b)| {
            if a.shape() != b.shape() || a.shape() != grid.shape() {
                return Err(Error::Mismatch(format!("shapes {:?} and {:?} on grid {:?}", a.shape(), b.shape(), grid.shape())));
            }
            if (a.t - b.t).abs() > 1e-9 * a.t.abs().max(1.0) {
                return Err(Error::Mismatch(format!("times {} and {}", a.t, b.t)));
            }
            let (mut sum, mut sup) = (0.0_f64, 0.0_f64);
            for (x, y) in a.r.iter().zip(&b.r).chain(a.b.iter().zip(&b.b)) {
                let d = x - y;
                sum += d * d;
                sup = sup.max(d.abs());
            }
            Ok(CompareRow { t: a.t, l2: (sum * grid.cell_area()).sqrt(), sup })
        })
        .collect()
}

/// Block average of `s` over `factor x factor` cells.
pub fn coarsen(s: &State, factor: usize) -> Result<State> {
    let (nx, ny) = s.shape();
    if factor == 0 || nx % factor != 0 || ny % factor != 0 {
        return Err(Error::Mismatch(format!("cannot coarsen {nx}x{ny} by {factor}")));
    }
    let w = 1.0 / (factor * factor) as f64;
    let mut out = State {
        r: Array2::zeros((nx / factor, ny / factor)),
        b: Array2::zeros((nx / factor, ny / factor)),
        t: s.t,
    };
    for ((i, j), &v) in s.r.indexed_iter() {
        out.r[[i / factor, j / factor]] += w * v;
    }
    for ((i, j), &v) in s.b.indexed_iter() {
        out.b[[i / factor, j / factor]] += w * v;
    }
    Ok(out)
}

/// Settings for [`refinement_study`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementPlan {
    pub levels: usize,
    /// The PDE is solved on a grid this many times finer than the lattice and
    /// block-averaged back before comparing.
    pub pde_refine: usize,
    pub t_end: f64,
}

/// One level of a [`refinement_study`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelResult {
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub lattice_steps: u64,
    pub t: f64,
    pub l2: f64,
    pub sup: f64,
}

/// Lattice versus PDE at a matched final time on successively halved `h`.
/// Level `k` uses `h / 2^k` on a grid with `2^k` times the cells of `grid`,
/// whose spacing must equal `h`. The PDE runs to the time actually reached by
/// the whole number of lattice steps.
pub fn refinement_study(
    p: &ModelParams,
    grid: &Grid,
    initial: &InitialCondition,
    solver: &SolverConfig,
    plan: &RefinementPlan,
) -> Result<Vec<LevelResult>> {
    if !grid_matches_spacing(p, grid) {
        return Err(Error::Config(format!(
            "lattice comparison needs cell size h = {} in both directions, grid has {} x {}",
            p.h,
            grid.dx(),
            grid.dy()
        )));
    }
    if matches!(initial, InitialCondition::Table { .. }) {
        return Err(Error::Config("refinement needs a constant or sinusoidal initial condition".into()));
    }
    if plan.pde_refine == 0 {
        return Err(Error::Config("pde_refine must be at least 1".into()));
    }
    (0..plan.levels)
        .map(|k| {
            let scale = 1usize << k;
            let params = ModelParams { h: p.h / scale as f64, ..*p };
            let coarse = Grid { nx: grid.nx * scale, ny: grid.ny * scale, ..*grid };
            let fine = Grid { nx: coarse.nx * plan.pde_refine, ny: coarse.ny * plan.pde_refine, ..*grid };

            let s0 = make_initial(initial, &coarse)?;
            let l0 = LatticeState::from_state(&s0, &params);
            let steps = steps_for_time(plan.t_end, &params, l0.rate_scale);
            let last = evolve_lattice(&l0, &params, steps, steps)?.pop().expect("trajectory is never empty");
            let micro = last.to_state(params.h);

            let f0 = make_initial(initial, &fine)?;
            let run = run_pde(&f0, &params, &fine, solver, micro.t, None, |_, _| Ok(()))?;
            let mut macro_ = coarsen(&run.state, plan.pde_refine)?;
            macro_.t = micro.t;

            let row = compare_micro_macro(&[micro], &[macro_], &coarse)?[0];
            log::info!("level {k}: h = {}, L2 = {:.3e}", params.h, row.l2);
            Ok(LevelResult {
                h: params.h,
                nx: coarse.nx,
                ny: coarse.ny,
                lattice_steps: steps,
                t: row.t,
                l2: row.l2,
                sup: row.sup,
            })
        })
        .collect()
}

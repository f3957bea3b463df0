//! Implicit Euler in entropy variables with an `H^1` regularization.
//!
//! The unknowns are `(u, v)` per cell and the densities are always recovered
//! through the closed-form inverse, so every iterate lies strictly inside the
//! admissible set. The discrete problem is
//!
//! `(s(u, v) - s_prev) / tau + div F(s(u, v)) - w (lap u - u) = 0`
//!
//! with `F` the same finite-volume flux the explicit scheme uses. Each iteration
//! freezes `G` at the current iterate and solves the linear system
//! `(J / tau - div(G grad) + w (I - lap)) delta = -R`, where `J` is the inverse
//! entropy Hessian.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use ndarray::Array2;

use super::entropy::{clip_inward, entropy_vars, hessian_inverse, primal_from_entropy};
use super::flux::{fluxes_into, Coefficients};
use super::mobility::assemble_g_h;
use super::{FluxField, SolverConfig, Variant};
use crate::error::{Error, Result};
use crate::model::{EntropyState, Grid, ModelParams, State};
use crate::stencil::{divergence, east, laplacian};

/// Convergence record of one implicit step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitReport {
    pub iterations: usize,
    /// Sup-norm change of the densities in the last iteration.
    pub last_update: f64,
    /// `tau * |R|_inf` at the accepted iterate.
    pub residual: f64,
}

/// Residual of the discrete problem for both species.
pub fn implicit_residual(
    s: &State,
    e: &EntropyState,
    s_prev: &State,
    p: &ModelParams,
    grid: &Grid,
    tau: f64,
    weight: f64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let c = Coefficients::new(p, Variant::ReducedSym)?;
    Ok(residual_with(s, e, s_prev, &c, grid, tau, weight))
}

fn residual_with(
    s: &State,
    e: &EntropyState,
    s_prev: &State,
    c: &Coefficients,
    grid: &Grid,
    tau: f64,
    weight: f64,
) -> (Array2<f64>, Array2<f64>) {
    let (nx, ny) = s.shape();
    let (dx, dy) = (grid.dx(), grid.dy());
    let mut f = FluxField::zeros(nx, ny);
    fluxes_into(s, c, grid, &mut f);
    let mut rr = divergence(&f.jr_x, &f.jr_y, dx, dy);
    let mut rb = divergence(&f.jb_x, &f.jb_y, dx, dy);
    let lu = laplacian(&e.u, dx, dy);
    let lv = laplacian(&e.v, dx, dy);
    for ((i, j), x) in rr.indexed_iter_mut() {
        *x += (s.r[[i, j]] - s_prev.r[[i, j]]) / tau - weight * (lu[[i, j]] - e.u[[i, j]]);
    }
    for ((i, j), x) in rb.indexed_iter_mut() {
        *x += (s.b[[i, j]] - s_prev.b[[i, j]]) / tau - weight * (lv[[i, j]] - e.v[[i, j]]);
    }
    (rr, rb)
}

fn sup(a: &Array2<f64>) -> f64 {
    a.fold(0.0, |m, &x| m.max(x.abs()))
}

fn to_primal(e: &EntropyState, grid: &Grid, h: f64) -> Option<State> {
    let (nx, ny) = e.u.dim();
    let mut s = State::zeros(grid);
    for i in 0..nx {
        for j in 0..ny {
            let (r, b) = primal_from_entropy(e.u[[i, j]], e.v[[i, j]], grid.x(i), h)?;
            s.r[[i, j]] = r;
            s.b[[i, j]] = b;
        }
    }
    Some(s)
}

/// Sparse assembly of the frozen-coefficient operator.
fn assemble(s: &State, p: &ModelParams, grid: &Grid, tau: f64, weight: f64) -> Vec<(usize, usize, f64)> {
    let (nx, ny) = s.shape();
    let idx = |i: usize, j: usize| 2 * (i * ny + j);
    let mut t = Vec::with_capacity(nx * ny * 20);

    let g = Array2::from_shape_fn((nx, ny), |(i, j)| assemble_g_h(s.r[[i, j]], s.b[[i, j]], p).0);
    for i in 0..nx {
        for j in 0..ny {
            let k = idx(i, j);
            let jac = hessian_inverse(s.r[[i, j]], s.b[[i, j]]);
            for a in 0..2 {
                for b in 0..2 {
                    let reg = if a == b { weight } else { 0.0 };
                    t.push((k + a, k + b, jac[a][b] / tau + reg));
                }
            }
        }
    }

    // Face coupling: the 2x2 block of G for the face direction, averaged over
    // the two cells, plus the regularization Laplacian.
    let mut couple = |c: usize, n: usize, block: [[f64; 2]; 2], h2: f64| {
        for a in 0..2 {
            for b in 0..2 {
                let reg = if a == b { weight } else { 0.0 };
                let w = (block[a][b] + reg) / h2;
                t.push((c + a, c + b, w));
                t.push((c + a, n + b, -w));
                t.push((n + a, n + b, w));
                t.push((n + a, c + b, -w));
            }
        }
    };
    let face = |ga: &nalgebra::Matrix4<f64>, gb: &nalgebra::Matrix4<f64>, o: usize| {
        let mut m = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] = 0.5 * (ga[(2 * a + o, 2 * b + o)] + gb[(2 * a + o, 2 * b + o)]);
            }
        }
        m
    };
    let (dx2, dy2) = (grid.dx().powi(2), grid.dy().powi(2));
    for i in 0..nx {
        let e = east(i, nx);
        for j in 0..ny {
            couple(idx(i, j), idx(e, j), face(&g[[i, j]], &g[[e, j]], 0), dx2);
            if j + 1 < ny {
                couple(idx(i, j), idx(i, j + 1), face(&g[[i, j]], &g[[i, j + 1]], 1), dy2);
            }
        }
    }
    t
}

fn solve_sparse(n: usize, mut entries: Vec<(usize, usize, f64)>, rhs: &[f64]) -> Result<Vec<f64>> {
    entries.sort_by_key(|&(r, c, _)| (c, r));
    let mut merged: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(entries.len());
    for (r, c, v) in entries {
        match merged.last_mut() {
            Some(last) if last.row == r && last.col == c => last.val += v,
            _ => merged.push(Triplet::new(r, c, v)),
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &merged)
        .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
    let lu = a.as_ref().sp_lu().map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
    let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::LinearSolve("non-finite solution".into()))
    }
}

/// One implicit step of length `cfg.tau` from `s_prev`.
pub fn step_implicit_entropy(
    s_prev: &State,
    p: &ModelParams,
    grid: &Grid,
    cfg: &SolverConfig,
) -> Result<(State, ImplicitReport)> {
    let c = Coefficients::new(p, Variant::ReducedSym)?;
    let tau = cfg.tau;
    let weight = cfg.regularization.unwrap_or(tau);
    let (nx, ny) = s_prev.shape();
    if (nx, ny) != grid.shape() {
        return Err(Error::Mismatch(format!("state {:?} vs grid {:?}", (nx, ny), grid.shape())));
    }

    let mut e = EntropyState { u: Array2::zeros((nx, ny)), v: Array2::zeros((nx, ny)) };
    for i in 0..nx {
        for j in 0..ny {
            let (r0, b0) = (s_prev.r[[i, j]], s_prev.b[[i, j]]);
            let (r, b) = clip_inward(r0, b0, cfg.clip_eps).ok_or(Error::NotInterior { i, j, r: r0, b: b0 })?;
            let (u, v) = entropy_vars(r, b, grid.x(i), p.h);
            e.u[[i, j]] = u;
            e.v[[i, j]] = v;
        }
    }
    let mut s = to_primal(&e, grid, p.h).ok_or(Error::Overflow { i: 0, j: 0, u: f64::NAN, v: f64::NAN })?;
    let (mut res_r, mut res_b) = residual_with(&s, &e, s_prev, &c, grid, tau, weight);
    let mut res = tau * sup(&res_r).max(sup(&res_b));
    let mut last_update = f64::INFINITY;

    for iter in 1..=cfg.fp_maxiter {
        let rhs: Vec<f64> = (0..nx * ny).flat_map(|k| [-res_r[[k / ny, k % ny]], -res_b[[k / ny, k % ny]]]).collect();
        let delta = solve_sparse(2 * nx * ny, assemble(&s, p, grid, tau, weight), &rhs)?;

        let mut omega = 1.0;
        let accepted = loop {
            let mut trial = e.clone();
            for k in 0..nx * ny {
                let (i, j) = (k / ny, k % ny);
                trial.u[[i, j]] += omega * delta[2 * k];
                trial.v[[i, j]] += omega * delta[2 * k + 1];
            }
            if let Some(st) = to_primal(&trial, grid, p.h) {
                let (rr, rb) = residual_with(&st, &trial, s_prev, &c, grid, tau, weight);
                let rn = tau * sup(&rr).max(sup(&rb));
                if rn <= res || omega < 1.0 / 64.0 {
                    break Some((trial, st, rr, rb, rn));
                }
            } else if omega < 1.0 / 64.0 {
                break None;
            }
            omega *= 0.5;
        };
        let Some((trial, st, rr, rb, rn)) = accepted else {
            return Err(Error::NoConvergence { iters: iter, last_update, residual: res });
        };

        last_update = (&st.r - &s.r).fold(0.0_f64, |m, &x| m.max(x.abs())).max((&st.b - &s.b).fold(0.0_f64, |m, &x| m.max(x.abs())));
        e = trial;
        s = st;
        res_r = rr;
        res_b = rb;
        res = rn;
        if last_update < cfg.fp_tol {
            s.t = s_prev.t + tau;
            return Ok((s, ImplicitReport { iterations: iter, last_update, residual: res }));
        }
    }
    Err(Error::NoConvergence { iters: cfg.fp_maxiter, last_update, residual: res })
}

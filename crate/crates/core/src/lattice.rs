//! Microscopic exclusion model: jump rates, the synchronous master equation for
//! occupation probabilities, and a stochastic sampler for hard configurations.
//!
//! Reds move towards increasing `i`, blues towards decreasing `i`. Index `j`
//! counts up from the bottom wall.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Grid, ModelParams, State};
use crate::stencil::{north, shift, south};

/// Per-cell jump rates for one species, before the global rate scale.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransitionRates {
    pub fwd: f64,
    pub up: f64,
    pub down: f64,
}

impl TransitionRates {
    pub fn total(&self) -> f64 {
        self.fwd + self.up + self.down
    }
}

/// Occupation probabilities after `step` master-equation steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub r: Array2<f64>,
    pub b: Array2<f64>,
    pub step: u64,
    pub rate_scale: f64,
}

impl LatticeState {
    pub fn new(r: Array2<f64>, b: Array2<f64>, rate_scale: f64) -> Self {
        Self { r, b, step: 0, rate_scale }
    }

    /// Starts from a density state using the default rate scale for `p`.
    pub fn from_state(s: &State, p: &ModelParams) -> Self {
        Self::new(s.r.clone(), s.b.clone(), scale_rates(p))
    }

    pub fn dim(&self) -> (usize, usize) {
        self.r.dim()
    }

    /// Physical time: each step advances by `rate_scale * h`.
    pub fn time(&self, h: f64) -> f64 {
        self.step as f64 * self.rate_scale * h
    }

    pub fn to_state(&self, h: f64) -> State {
        State { r: self.r.clone(), b: self.b.clone(), t: self.time(h) }
    }
}

// Rates are written once against density accessors so the probability and
// hard-occupancy paths cannot drift apart.
#[inline]
fn red_rates_with<R, B>(r: R, b: B, p: &ModelParams, dim: (usize, usize), i: usize, j: usize) -> TransitionRates
where
    R: Fn(usize, usize) -> f64,
    B: Fn(usize, usize) -> f64,
{
    let (nx, ny) = dim;
    let ahead = shift(i, 1, nx);
    let vacancy = |i: usize, j: usize| 1.0 - (r(i, j) + b(i, j));
    let fwd = vacancy(ahead, j) * (1.0 + p.alpha * r(shift(i, 2, nx), j));
    let oncoming = b(ahead, j);
    let down = south(j).map_or(0.0, |s| vacancy(i, s) * (p.gamma0 + p.gamma1 * oncoming));
    let up = north(j, ny).map_or(0.0, |n| vacancy(i, n) * (p.gamma0 + p.gamma2 * oncoming));
    TransitionRates { fwd, up, down }
}

#[inline]
fn blue_rates_with<R, B>(r: R, b: B, p: &ModelParams, dim: (usize, usize), i: usize, j: usize) -> TransitionRates
where
    R: Fn(usize, usize) -> f64,
    B: Fn(usize, usize) -> f64,
{
    let (nx, ny) = dim;
    let ahead = shift(i, -1, nx);
    let vacancy = |i: usize, j: usize| 1.0 - (r(i, j) + b(i, j));
    let fwd = vacancy(ahead, j) * (1.0 + p.alpha * b(shift(i, -2, nx), j));
    let oncoming = r(ahead, j);
    let up = north(j, ny).map_or(0.0, |n| vacancy(i, n) * (p.gamma0 + p.gamma1 * oncoming));
    let down = south(j).map_or(0.0, |s| vacancy(i, s) * (p.gamma0 + p.gamma2 * oncoming));
    TransitionRates { fwd, up, down }
}

pub fn rates_red(s: &LatticeState, p: &ModelParams, i: usize, j: usize) -> TransitionRates {
    red_rates_with(|i, j| s.r[[i, j]], |i, j| s.b[[i, j]], p, s.dim(), i, j)
}

pub fn rates_blue(s: &LatticeState, p: &ModelParams, i: usize, j: usize) -> TransitionRates {
    blue_rates_with(|i, j| s.r[[i, j]], |i, j| s.b[[i, j]], p, s.dim(), i, j)
}

/// Largest uniform rate factor keeping every synchronous update inside the box.
///
/// Outflow from a cell is at most `(1 + alpha) + 2 (gamma0 + gamma_max)`, which
/// keeps densities nonnegative. Inflow into a cell is at most
/// `(1 - rho) (2 + 2 (gamma0 + gamma_max))`: one red from behind and one blue
/// from ahead, each with cohesion at most one since `alpha <= 1/2`, plus a
/// lateral arrival from each side. Bounding both keeps `rho <= 1`.
pub fn scale_rates(p: &ModelParams) -> f64 {
    let lateral = 2.0 * (p.gamma0 + p.gamma_max());
    let outflow = 1.0 + p.alpha + lateral;
    let inflow = 2.0_f64.max(1.0 + p.alpha) + lateral;
    1.0 / outflow.max(inflow)
}

const BOX_TOL: f64 = 1e-12;

/// One synchronous master-equation step with `s.rate_scale` applied to every rate.
pub fn master_step(s: &LatticeState, p: &ModelParams) -> Result<LatticeState> {
    let (nx, ny) = s.dim();
    let lam = s.rate_scale;
    let scaled = |t: TransitionRates| TransitionRates { fwd: lam * t.fwd, up: lam * t.up, down: lam * t.down };
    let red = Array2::from_shape_fn((nx, ny), |(i, j)| scaled(rates_red(s, p, i, j)));
    let blue = Array2::from_shape_fn((nx, ny), |(i, j)| scaled(rates_blue(s, p, i, j)));

    let mut out = LatticeState { r: Array2::zeros((nx, ny)), b: Array2::zeros((nx, ny)), step: s.step + 1, rate_scale: lam };
    for i in 0..nx {
        let behind = shift(i, -1, nx);
        let ahead = shift(i, 1, nx);
        for j in 0..ny {
            let above = |t: &Array2<TransitionRates>, f: &Array2<f64>| north(j, ny).map_or(0.0, |n| t[[i, n]].down * f[[i, n]]);
            let below = |t: &Array2<TransitionRates>, f: &Array2<f64>| south(j).map_or(0.0, |m| t[[i, m]].up * f[[i, m]]);

            let rr = red[[i, j]];
            out.r[[i, j]] = s.r[[i, j]] + red[[behind, j]].fwd * s.r[[behind, j]] + above(&red, &s.r) + below(&red, &s.r)
                - (rr.fwd + rr.down + rr.up) * s.r[[i, j]];

            let bb = blue[[i, j]];
            out.b[[i, j]] = s.b[[i, j]] + blue[[ahead, j]].fwd * s.b[[ahead, j]] + below(&blue, &s.b) + above(&blue, &s.b)
                - (bb.fwd + bb.up + bb.down) * s.b[[i, j]];
        }
    }
    for i in 0..nx {
        for j in 0..ny {
            let (r, b) = (out.r[[i, j]], out.b[[i, j]]);
            if !(r >= -BOX_TOL && b >= -BOX_TOL && r + b <= 1.0 + BOX_TOL) {
                return Err(Error::Box { i, j, r, b, rho: r + b });
            }
        }
    }
    Ok(out)
}

/// Runs `steps` master steps, keeping every `every`-th state plus the last.
pub fn evolve_lattice(s0: &LatticeState, p: &ModelParams, steps: u64, every: u64) -> Result<Vec<LatticeState>> {
    let every = every.max(1);
    let mut traj = vec![s0.clone()];
    let mut s = s0.clone();
    for k in 1..=steps {
        s = master_step(&s, p)?;
        if k % every == 0 || k == steps {
            traj.push(s.clone());
        }
    }
    Ok(traj)
}

/// Number of master steps covering physical time `t`.
pub fn steps_for_time(t: f64, p: &ModelParams, rate_scale: f64) -> u64 {
    (t / (rate_scale * p.h)).round().max(0.0) as u64
}

/// Content of one lattice site in a hard configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Site {
    #[default]
    Empty,
    Red,
    Blue,
}

pub type Occupancy = Array2<Site>;

/// Draws a hard configuration with the given per-cell occupation probabilities.
pub fn draw_occupancy<G: Rng>(r: &Array2<f64>, b: &Array2<f64>, rng: &mut G) -> Occupancy {
    Array2::from_shape_fn(r.dim(), |(i, j)| {
        let u: f64 = rng.random();
        if u < r[[i, j]] {
            Site::Red
        } else if u < r[[i, j]] + b[[i, j]] {
            Site::Blue
        } else {
            Site::Empty
        }
    })
}

/// Indicator fields of a hard configuration.
pub fn indicators(occ: &Occupancy) -> (Array2<f64>, Array2<f64>) {
    (occ.mapv(|s| f64::from(u8::from(s == Site::Red))), occ.mapv(|s| f64::from(u8::from(s == Site::Blue))))
}

/// Random-sequential exclusion dynamics. Each sweep visits every particle once
/// in a fresh random order; a particle picks forward, up, down or stay with the
/// scaled rates evaluated on the current configuration.
pub struct ExclusionSampler {
    occ: Occupancy,
    particles: Vec<(usize, usize)>,
    p: ModelParams,
    rate_scale: f64,
    rng: ChaCha8Rng,
}

impl ExclusionSampler {
    pub fn new(occ: Occupancy, p: ModelParams, rate_scale: f64, seed: u64) -> Self {
        let particles = occ.indexed_iter().filter(|(_, s)| **s != Site::Empty).map(|(ij, _)| ij).collect();
        Self { occ, particles, p, rate_scale, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Same as [`ExclusionSampler::new`] but on an independent stream of `seed`.
    pub fn with_stream(occ: Occupancy, p: ModelParams, rate_scale: f64, seed: u64, stream: u64) -> Self {
        let mut s = Self::new(occ, p, rate_scale, seed);
        s.rng.set_stream(stream);
        s
    }

    pub fn occupancy(&self) -> &Occupancy {
        &self.occ
    }

    pub fn sweep(&mut self) {
        let dim = self.occ.dim();
        let (nx, ny) = dim;
        let mut order: Vec<usize> = (0..self.particles.len()).collect();
        order.shuffle(&mut self.rng);
        for k in order {
            let (i, j) = self.particles[k];
            let occ = &self.occ;
            let r = |i: usize, j: usize| f64::from(u8::from(occ[[i, j]] == Site::Red));
            let b = |i: usize, j: usize| f64::from(u8::from(occ[[i, j]] == Site::Blue));
            let species = occ[[i, j]];
            let (t, ahead) = match species {
                Site::Red => (red_rates_with(r, b, &self.p, dim, i, j), shift(i, 1, nx)),
                Site::Blue => (blue_rates_with(r, b, &self.p, dim, i, j), shift(i, -1, nx)),
                Site::Empty => continue,
            };
            let lam = self.rate_scale;
            let u: f64 = self.rng.random();
            let target = if u < lam * t.fwd {
                Some((ahead, j))
            } else if u < lam * (t.fwd + t.down) {
                south(j).map(|m| (i, m))
            } else if u < lam * (t.fwd + t.down + t.up) {
                north(j, ny).map(|n| (i, n))
            } else {
                None
            };
            if let Some(dst) = target {
                if self.occ[dst] == Site::Empty {
                    self.occ[dst] = species;
                    self.occ[[i, j]] = Site::Empty;
                    self.particles[k] = dst;
                }
            }
        }
    }
}

/// Trajectory of `sweeps` random-sequential sweeps, including the start.
pub fn sample_exclusion(s0: &Occupancy, p: &ModelParams, rate_scale: f64, sweeps: usize, seed: u64) -> Vec<Occupancy> {
    let mut sampler = ExclusionSampler::new(s0.clone(), *p, rate_scale, seed);
    let mut traj = vec![s0.clone()];
    for _ in 0..sweeps {
        sampler.sweep();
        traj.push(sampler.occupancy().clone());
    }
    traj
}

/// Mean occupation over `members` independent trajectories, each started from a
/// configuration drawn from the probabilities in `init`. Members run on
/// separate streams of `seed`, so the result does not depend on `workers`.
pub fn ensemble_mean(
    init: &LatticeState,
    p: &ModelParams,
    sweeps: usize,
    members: usize,
    seed: u64,
    workers: usize,
) -> (Array2<f64>, Array2<f64>) {
    let dim = init.dim();
    let run = |m: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2 * m as u64);
        let occ = draw_occupancy(&init.r, &init.b, &mut rng);
        let mut sampler = ExclusionSampler::with_stream(occ, *p, init.rate_scale, seed, 2 * m as u64 + 1);
        for _ in 0..sweeps {
            sampler.sweep();
        }
        indicators(sampler.occupancy())
    };
    let workers = workers.max(1).min(members.max(1));
    let results: Vec<(Array2<f64>, Array2<f64>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let run = &run;
                scope.spawn(move || (w..members).step_by(workers).map(|m| (m, run(m))).collect::<Vec<_>>())
            })
            .collect();
        let mut all: Vec<_> = handles.into_iter().flat_map(|h| h.join().expect("ensemble worker panicked")).collect();
        all.sort_by_key(|(m, _)| *m);
        all.into_iter().map(|(_, x)| x).collect()
    });
    let mut r = Array2::zeros(dim);
    let mut b = Array2::zeros(dim);
    for (ri, bi) in &results {
        r += ri;
        b += bi;
    }
    let n = members.max(1) as f64;
    (r / n, b / n)
}

/// Whether the grid spacing equals the lattice spacing `h` in both directions,
/// which is when a lattice run and a PDE run on `grid` describe the same system.
pub fn grid_matches_spacing(p: &ModelParams, grid: &Grid) -> bool {
    let ok = |len: f64, n: usize| ((len / n as f64) - p.h).abs() <= 1e-9 * p.h;
    ok(grid.width(), grid.nx) && ok(grid.height(), grid.ny)
}

use serde::Serialize;

use crate::model::{Grid, ModelParams, State};
use crate::stencil::{grad_x, grad_y};

/// Entropy and its four integrand contributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Entropy {
    pub total: f64,
    pub red: f64,
    pub blue: f64,
    pub vacancy: f64,
    pub potential: f64,
}

/// Entropy and dissipation at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyReport {
    pub t: f64,
    pub entropy: Entropy,
    /// Dissipation with the `(1 - rho)^2` weights.
    pub d1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dissipation {
    D0,
    D1,
}

/// `x (log x - 1)`, continuous at 0.
fn xlogx_m1(x: f64) -> f64 {
    if x > 0.0 {
        x * (x.ln() - 1.0)
    } else {
        0.0
    }
}

/// Midpoint-rule entropy `int r(log r - 1) + b(log b - 1) + (1 - rho)(log(1 - rho) - 1)/2 + (2/h)(b - r) x`.
pub fn entropy(s: &State, grid: &Grid, h: f64) -> Entropy {
    let (nx, ny) = s.shape();
    let da = grid.cell_area();
    let (mut red, mut blue, mut vacancy, mut potential) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..nx {
        let x = grid.x(i);
        for j in 0..ny {
            let (r, b) = (s.r[[i, j]], s.b[[i, j]]);
            red += xlogx_m1(r);
            blue += xlogx_m1(b);
            let w = 1.0 - r - b;
            vacancy += if w > 0.0 { 0.5 * xlogx_m1(w) } else { 0.0 };
            potential += (2.0 / h) * (-x * r + x * b);
        }
    }
    let (red, blue, vacancy, potential) = (red * da, blue * da, vacancy * da, potential * da);
    Entropy { total: red + blue + vacancy + potential, red, blue, vacancy, potential }
}

/// Dissipation with weight `(1 - rho)` (`D0`) or `(1 - rho)^2` (`D1`) on the
/// square-root gradients, scaled by `(h/2) min(1/2, gamma0)`.
pub fn dissipation(s: &State, grid: &Grid, p: &ModelParams, which: Dissipation) -> f64 {
    let (dx, dy) = (grid.dx(), grid.dy());
    let sr = s.r.mapv(|x| x.max(0.0).sqrt());
    let sb = s.b.mapv(|x| x.max(0.0).sqrt());
    let rho = s.rho();
    let sw = rho.mapv(|x| (1.0 - x).max(0.0).sqrt());
    let sq = |f: &ndarray::Array2<f64>| {
        let (gx, gy) = (grad_x(f, dx), grad_y(f, dy));
        &gx * &gx + &gy * &gy
    };
    let (gr, gb, gw, grho) = (sq(&sr), sq(&sb), sq(&sw), sq(&rho));
    let c0 = 0.5 * p.h * p.gamma0.min(0.5);
    let mut total = 0.0;
    for (ij, &rh) in rho.indexed_iter() {
        let w = (1.0 - rh).max(0.0);
        let weight = match which {
            Dissipation::D0 => w,
            Dissipation::D1 => w * w,
        };
        total += weight * (gr[ij] + gb[ij]) + gw[ij] + grho[ij];
    }
    c0 * total * grid.cell_area()
}

pub fn entropy_report(s: &State, grid: &Grid, p: &ModelParams) -> EntropyReport {
    EntropyReport { t: s.t, entropy: entropy(s, grid, p.h), d1: dissipation(s, grid, p, Dissipation::D1) }
}

/// Outcome of [`entropy_growth_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthCheck {
    /// Every rate is finite, dissipation is nonnegative and the late maximum does
    /// not exceed the early maximum.
    pub bounded: bool,
    /// Largest observed `dE/dt + D`, a run-level bound.
    pub c_fit: f64,
    /// Least-squares slope of `dE/dt + D` against time.
    pub slope: f64,
    pub max_early: f64,
    pub max_late: f64,
}

/// Rates `dE/dt + D` between consecutive reports, with `D` averaged over each interval.
pub fn growth_rates(series: &[EntropyReport]) -> Vec<(f64, f64)> {
    series
        .windows(2)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            let rate = (w[1].entropy.total - w[0].entropy.total) / dt + 0.5 * (w[0].d1 + w[1].d1);
            (0.5 * (w[0].t + w[1].t), rate)
        })
        .collect()
}

/// Checks that `dE/dt + D` stays bounded without an upward trend: its maximum
/// over the second half of the run may exceed the first-half maximum by at most
/// `tol (1 + |first-half maximum|)`. Needs at least three reports.
pub fn entropy_growth_check(series: &[EntropyReport], tol: f64) -> Option<GrowthCheck> {
    if series.len() < 3 {
        return None;
    }
    let rates = growth_rates(series);
    let half = rates.len() / 2;
    let max_of = |xs: &[(f64, f64)]| xs.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let max_early = max_of(&rates[..half.max(1)]);
    let max_late = max_of(&rates[half.max(1)..]);
    let max_late = if max_late.is_finite() { max_late } else { max_early };
    let finite = rates.iter().all(|x| x.1.is_finite()) && series.iter().all(|s| s.d1 >= -1e-10);
    let n = rates.len() as f64;
    let (mt, mg) = (rates.iter().map(|x| x.0).sum::<f64>() / n, rates.iter().map(|x| x.1).sum::<f64>() / n);
    let sxx: f64 = rates.iter().map(|x| (x.0 - mt).powi(2)).sum();
    let sxy: f64 = rates.iter().map(|x| (x.0 - mt) * (x.1 - mg)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    Some(GrowthCheck {
        bounded: finite && max_late <= max_early + tol * (1.0 + max_early.abs()),
        c_fit: max_early.max(max_late),
        slope,
        max_early,
        max_late,
    })
}

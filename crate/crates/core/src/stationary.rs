//! Steady states that are constant along the corridor.
//!
//! With `F = rb/(1 - rho)`, `P = r/(1 - rho)`, `Q = b/(1 - rho)` and
//! `g = gamma1 + gamma2`, zero lateral flux reads
//!
//! ```text
//!  F + (g/2) F' + gamma0 P' = 0
//! -F + (g/2) F' + gamma0 Q' = 0
//! ```
//!
//! Multiplying by `w^2`, `w = 1 - rho`, and expanding the derivatives gives
//! `A (r', b') = rbw (-1, 1)` with
//!
//! ```text
//! A = | (1-b)(g b/2 + gamma0)   r (g(1-r)/2 + gamma0) |
//!     | b (g(1-b)/2 + gamma0)   (1-r)(g r/2 + gamma0) |
//! ```
//!
//! and `det A = w gamma0 (gamma0 + (g/2)(r(1-b) + b(1-r)))`, so
//!
//! ```text
//! r' = -rb (g r(1-r) + gamma0) / (gamma0 (gamma0 + (g/2)(r(1-b) + b(1-r))))
//! b' =  rb (g b(1-b) + gamma0) / (same)
//! ```
//!
//! Adding the two equations shows `g F + gamma0 rho/(1 - rho)` is constant.

use crate::error::{Error, Result};
use crate::model::{Grid, ModelParams};

pub const CLIP_EPS: f64 = 1e-10;

/// Samples of a steady profile across the corridor.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub y: Vec<f64>,
    pub r: Vec<f64>,
    pub b: Vec<f64>,
    /// Curve constant at the first sample.
    pub c: f64,
    /// Integration stopped because the state left the admissible set.
    pub truncated: bool,
}

fn trapezoid(y: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (1..y.len()).map(|k| 0.5 * (f(k) + f(k - 1)) * (y[k] - y[k - 1])).sum()
}

impl Profile {
    /// Masses per unit length along the corridor.
    pub fn line_masses(&self) -> (f64, f64) {
        (trapezoid(&self.y, |k| self.r[k]), trapezoid(&self.y, |k| self.b[k]))
    }

    /// `int r b dy`.
    pub fn overlap(&self) -> f64 {
        trapezoid(&self.y, |k| self.r[k] * self.b[k])
    }

    pub fn max_product(&self) -> f64 {
        self.r.iter().zip(&self.b).map(|(r, b)| r * b).fold(0.0, f64::max)
    }

    /// Largest deviation of the curve constant from its value at the first sample.
    pub fn c_drift(&self, p: &ModelParams) -> f64 {
        self.r
            .iter()
            .zip(&self.b)
            .map(|(&r, &b)| (curve_value(r, b, p) - self.c).abs())
            .fold(0.0, f64::max)
    }

    /// Location where `r = b`, by linear interpolation, if the sign of `r - b` changes.
    pub fn crossing(&self) -> Option<f64> {
        let d: Vec<f64> = self.r.iter().zip(&self.b).map(|(r, b)| r - b).collect();
        (1..d.len()).find(|&k| d[k - 1] > 0.0 && d[k] <= 0.0).map(|k| {
            let t = d[k - 1] / (d[k - 1] - d[k]);
            self.y[k - 1] + t * (self.y[k] - self.y[k - 1])
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

fn curve_value(r: f64, b: f64, p: &ModelParams) -> f64 {
    let w = 1.0 - r - b;
    (p.gamma_sum() * r * b + p.gamma0 * (r + b)) / w
}

/// `(gamma1 + gamma2) rb/(1 - rho) + gamma0 rho/(1 - rho)`.
pub fn curve_constant(r: f64, b: f64, p: &ModelParams) -> Result<f64> {
    if r + b >= 1.0 - CLIP_EPS {
        return Err(Error::Singular { r, b });
    }
    Ok(curve_value(r, b, p))
}

fn admissible(r: f64, b: f64) -> bool {
    r > 0.0 && b > 0.0 && r + b < 1.0 - CLIP_EPS
}

/// `(dr/dy, db/dy)` of the steady lateral balance.
pub fn stationary_rhs(r: f64, b: f64, p: &ModelParams) -> Result<(f64, f64)> {
    if !(r >= 0.0 && b >= 0.0 && r + b < 1.0 - CLIP_EPS) {
        return Err(Error::Singular { r, b });
    }
    let g = p.gamma_sum();
    let den = p.gamma0 * (p.gamma0 + 0.5 * g * (r * (1.0 - b) + b * (1.0 - r)));
    if !(den > 0.0) {
        return Err(Error::Singular { r, b });
    }
    let rb = r * b;
    Ok((-rb * (g * r * (1.0 - r) + p.gamma0) / den, rb * (g * b * (1.0 - b) + p.gamma0) / den))
}

fn rk4(r: f64, b: f64, h: f64, p: &ModelParams) -> Option<(f64, f64)> {
    let f = |r: f64, b: f64| if admissible(r, b) { stationary_rhs(r, b, p).ok() } else { None };
    let k1 = f(r, b)?;
    let k2 = f(r + 0.5 * h * k1.0, b + 0.5 * h * k1.1)?;
    let k3 = f(r + 0.5 * h * k2.0, b + 0.5 * h * k2.1)?;
    let k4 = f(r + h * k3.0, b + h * k3.1)?;
    let rn = r + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
    let bn = b + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    admissible(rn, bn).then_some((rn, bn))
}

/// Integrates from `(r0, b0)` at `y_span.0` to `y_span.1` (either direction) with
/// classical RK4 and a step of at most `dy`.
pub fn integrate_profile(r0: f64, b0: f64, p: &ModelParams, y_span: (f64, f64), dy: f64) -> Result<Profile> {
    p.validate()?;
    if !admissible(r0, b0) {
        return Err(Error::NotInterior { i: 0, j: 0, r: r0, b: b0 });
    }
    if !(dy > 0.0) {
        return Err(Error::Config("profile step must be positive".into()));
    }
    stationary_rhs(r0, b0, p)?;
    let len = y_span.1 - y_span.0;
    let n = (len.abs() / dy).ceil().max(1.0) as usize;
    let h = len / n as f64;
    let mut prof = Profile { y: vec![y_span.0], r: vec![r0], b: vec![b0], c: curve_value(r0, b0, p), truncated: false };
    let (mut r, mut b) = (r0, b0);
    for k in 1..=n {
        match rk4(r, b, h, p) {
            Some((rn, bn)) => {
                r = rn;
                b = bn;
                prof.y.push(y_span.0 + k as f64 * h);
                prof.r.push(r);
                prof.b.push(b);
            }
            None => {
                prof.truncated = true;
                break;
            }
        }
    }
    Ok(prof)
}

/// Profile through `r = b = s` at `y_cross`, covering `[y_lo, y_hi]`.
fn profile_through(s: f64, y_cross: f64, y_lo: f64, y_hi: f64, p: &ModelParams, dy: f64) -> Result<Profile> {
    let fwd = if y_hi > y_cross { Some(integrate_profile(s, s, p, (y_cross, y_hi), dy)?) } else { None };
    let bwd = if y_cross > y_lo { Some(integrate_profile(s, s, p, (y_cross, y_lo), dy)?) } else { None };
    let mut out = Profile { y: vec![], r: vec![], b: vec![], c: curve_value(s, s, p), truncated: false };
    if let Some(bw) = &bwd {
        out.truncated |= bw.truncated;
        for k in (1..bw.len()).rev() {
            out.y.push(bw.y[k]);
            out.r.push(bw.r[k]);
            out.b.push(bw.b[k]);
        }
    }
    out.y.push(y_cross);
    out.r.push(s);
    out.b.push(s);
    if let Some(fw) = &fwd {
        out.truncated |= fw.truncated;
        out.y.extend_from_slice(&fw.y[1..]);
        out.r.extend_from_slice(&fw.r[1..]);
        out.b.extend_from_slice(&fw.b[1..]);
    }
    out.c = curve_value(out.r[0], out.b[0], p);
    Ok(out)
}

const S_MAX: f64 = 0.5 * (1.0 - 1e-6);

/// Crossing value `s` whose profile through `y_cross` carries `total` line mass.
fn fit_total(total: f64, y_cross: f64, grid: &Grid, p: &ModelParams, dy: f64) -> Result<(f64, Profile)> {
    let eval = |s: f64| -> Result<(f64, Profile)> {
        let prof = profile_through(s, y_cross, grid.y_min, grid.y_max, p, dy)?;
        let (mr, mb) = prof.line_masses();
        let m = if prof.truncated { f64::INFINITY } else { mr + mb };
        Ok((m, prof))
    };
    let (mut lo, mut hi) = (0.0_f64, S_MAX);
    let (m_hi, prof_hi) = eval(hi)?;
    if m_hi < total {
        return Err(Error::NoBracket(format!("total line mass {total} exceeds the largest reachable {m_hi}")));
    }
    let mut best = (hi, prof_hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (m, prof) = eval(mid)?;
        if m < total {
            lo = mid;
        } else {
            hi = mid;
            best = (mid, prof);
        }
        if (m - total).abs() <= 1e-12 * total {
            return Ok((mid, eval(mid)?.1));
        }
    }
    Ok(best)
}

/// Steady profile on the grid's cross-section whose masses over the grid match
/// `(m_r, m_b)`. Profiles are parameterized by the crossing point `y_cross` and
/// the common density `s` there; `s` is bisected for the total mass and
/// `y_cross` for the mass difference.
pub fn match_masses(m_r: f64, m_b: f64, p: &ModelParams, grid: &Grid, dy: f64) -> Result<Profile> {
    const MASS_TOL: f64 = 1e-6;
    p.validate()?;
    grid.validate()?;
    let area = grid.area();
    if !(m_r > 0.0 && m_b > 0.0 && m_r < area && m_b < area) {
        return Err(Error::Config(format!("masses must lie in (0, {area}), got ({m_r}, {m_b})")));
    }
    let width = grid.width();
    let (tr, tb) = (m_r / width, m_b / width);
    let diff_at = |y: f64| -> Result<(f64, Profile)> {
        let (_, prof) = fit_total(tr + tb, y, grid, p, dy)?;
        let (mr, mb) = prof.line_masses();
        Ok((mr - mb, prof))
    };

    let (mut lo, mut hi) = (grid.y_min, grid.y_max);
    let (d_lo, _) = diff_at(lo)?;
    let (d_hi, _) = diff_at(hi)?;
    let target = tr - tb;
    if !(d_lo <= target && target <= d_hi) {
        return Err(Error::NoBracket(format!(
            "mass difference {} outside the reachable range [{}, {}]",
            target * width,
            d_lo * width,
            d_hi * width
        )));
    }
    let mut prof = None;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let (d, pr) = diff_at(mid)?;
        let done = (d - target).abs() <= 1e-10 * (tr + tb) || hi - lo <= 1e-15 * grid.height();
        if d < target {
            lo = mid;
        } else {
            hi = mid;
        }
        prof = Some(pr);
        if done {
            break;
        }
    }
    let prof = prof.expect("bisection runs at least once");
    let (mr, mb) = prof.line_masses();
    if (mr - tr).abs() > MASS_TOL * tr || (mb - tb).abs() > MASS_TOL * tb {
        return Err(Error::NoBracket(format!(
            "could not match masses ({m_r}, {m_b}); best profile has ({}, {})",
            mr * width,
            mb * width
        )));
    }
    Ok(prof)
}

/// One phase-plane solution curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCurve {
    pub c: f64,
    pub r: Vec<f64>,
    pub b: Vec<f64>,
}

/// Controls for [`sweep_curves`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveOptions {
    pub dy: f64,
    /// Tracing stops once either density falls below this.
    pub floor: f64,
    pub max_steps: usize,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self { dy: 1e-4, floor: 1e-6, max_steps: 2_000_000 }
    }
}

/// Point on the diagonal `r = b` where the curve constant equals `c`.
pub fn diagonal_seed(c: f64, p: &ModelParams) -> f64 {
    let g = p.gamma_sum();
    if g > 0.0 {
        let a = p.gamma0 + c;
        c / (a + (a * a + g * c).sqrt())
    } else {
        c / (2.0 * (p.gamma0 + c))
    }
}

fn trace(s: f64, h: f64, p: &ModelParams, opts: &CurveOptions) -> (Vec<f64>, Vec<f64>) {
    let (mut r, mut b) = (s, s);
    let (mut rs, mut bs) = (vec![], vec![]);
    for _ in 0..opts.max_steps {
        match rk4(r, b, h, p) {
            Some((rn, bn)) => {
                r = rn;
                b = bn;
                rs.push(r);
                bs.push(b);
                if r < opts.floor || b < opts.floor {
                    break;
                }
            }
            None => break,
        }
    }
    (rs, bs)
}

/// Traces the level set of the curve constant for each `c`, seeded on the
/// diagonal and integrated both ways until one density reaches `opts.floor`.
/// Points run from the b-axis end (large r) to the r-axis end (large b).
pub fn sweep_curves(p: &ModelParams, c_values: &[f64], opts: &CurveOptions) -> Result<Vec<PhaseCurve>> {
    p.validate()?;
    if p.gamma0 <= 0.0 {
        return Err(Error::Singular { r: 0.0, b: 0.0 });
    }
    Ok(c_values
        .iter()
        .map(|&c| {
            if !(c > 0.0) {
                return PhaseCurve { c, r: vec![], b: vec![] };
            }
            let s = diagonal_seed(c, p);
            let (rb, bb) = trace(s, -opts.dy, p, opts);
            let (rf, bf) = trace(s, opts.dy, p, opts);
            let mut r: Vec<f64> = rb.into_iter().rev().collect();
            let mut b: Vec<f64> = bb.into_iter().rev().collect();
            r.push(s);
            b.push(s);
            r.extend(rf);
            b.extend(bf);
            PhaseCurve { c, r, b }
        })
        .collect())
}

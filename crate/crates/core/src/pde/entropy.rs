use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{EntropyState, Grid, State};

/// Entropy variables at one point:
/// `u = log r - log(1 - rho)/2 - 2x/h`, `v = log b - log(1 - rho)/2 + 2x/h`.
pub fn entropy_vars(r: f64, b: f64, x: f64, h: f64) -> (f64, f64) {
    let half_vac = 0.5 * (1.0 - r - b).ln();
    let pot = 2.0 * x / h;
    (r.ln() - half_vac - pot, b.ln() - half_vac + pot)
}

// Positive root of `z^2 + A z - B = 0` with `A = e^p + e^q`, `B = e^q`,
// scaled by `e^m` so no exponential overflows.
fn scaled_root(p: f64, q: f64) -> f64 {
    let m = p.max(q).max(0.5 * q);
    let a = (p - m).exp() + (q - m).exp();
    (q - m).exp() / (0.5 * a + (0.25 * a * a + (q - 2.0 * m).exp()).sqrt())
}

/// Inverse of [`entropy_vars`]. Returns `None` if the result is not strictly admissible
/// in floating point.
pub fn primal_from_entropy(u: f64, v: f64, x: f64, h: f64) -> Option<(f64, f64)> {
    let s = 4.0 * x / h;
    let b = scaled_root(u + v, 2.0 * v - s);
    let r = scaled_root(u + v, 2.0 * u + s);
    let ok = r.is_finite() && b.is_finite() && r > 0.0 && b > 0.0 && r + b < 1.0;
    ok.then_some((r, b))
}

/// Jacobian of the inverse map, `d(r, b)/d(u, v)`, i.e. the inverse Hessian of the
/// entropy density.
pub fn hessian_inverse(r: f64, b: f64) -> [[f64; 2]; 2] {
    let k = 0.5 / (1.0 - r - b);
    let (ir, ib) = (1.0 / r, 1.0 / b);
    let det = ir * ib + k * (ir + ib);
    [[(ib + k) / det, -k / det], [-k / det, (ir + k) / det]]
}

/// Converts a state to entropy variables. Cells within `clip_eps` of the
/// boundary of the admissible set are moved inward first.
pub fn primal_to_entropy(s: &State, grid: &Grid, h: f64, clip_eps: f64) -> Result<EntropyState> {
    let (nx, ny) = s.shape();
    let mut u = Array2::zeros((nx, ny));
    let mut v = Array2::zeros((nx, ny));
    for i in 0..nx {
        for j in 0..ny {
            let (r, b) = clip_inward(s.r[[i, j]], s.b[[i, j]], clip_eps).ok_or(Error::NotInterior {
                i,
                j,
                r: s.r[[i, j]],
                b: s.b[[i, j]],
            })?;
            let (uu, vv) = entropy_vars(r, b, grid.x(i), h);
            u[[i, j]] = uu;
            v[[i, j]] = vv;
        }
    }
    Ok(EntropyState { u, v })
}

pub(crate) fn clip_inward(r: f64, b: f64, eps: f64) -> Option<(f64, f64)> {
    let floor = eps.max(f64::MIN_POSITIVE);
    if !(r > -eps && b > -eps && r + b < 1.0 + eps) {
        return None;
    }
    if r > 0.0 && b > 0.0 && r + b < 1.0 {
        return Some((r, b));
    }
    let (mut r2, mut b2) = (r.max(floor), b.max(floor));
    let excess = r2 + b2 - (1.0 - floor);
    if excess > 0.0 {
        let shrink = (1.0 - floor) / (r2 + b2);
        r2 *= shrink;
        b2 *= shrink;
        if r2 + b2 >= 1.0 {
            return None;
        }
    }
    log::debug!("clipped ({r:e}, {b:e}) to ({r2:e}, {b2:e})");
    Some((r2, b2))
}

/// Converts entropy variables back to densities, always strictly admissible.
pub fn entropy_to_primal(e: &EntropyState, grid: &Grid, h: f64) -> Result<State> {
    let (nx, ny) = e.u.dim();
    let mut s = State::zeros(grid);
    for i in 0..nx {
        for j in 0..ny {
            let (u, v) = (e.u[[i, j]], e.v[[i, j]]);
            let (r, b) = primal_from_entropy(u, v, grid.x(i), h).ok_or(Error::Overflow { i, j, u, v })?;
            s.r[[i, j]] = r;
            s.b[[i, j]] = b;
        }
    }
    Ok(s)
}

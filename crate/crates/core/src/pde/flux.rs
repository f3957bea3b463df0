use ndarray::Array2;

use super::Variant;
use crate::error::{Error, Result};
use crate::model::{Grid, ModelParams, State};
use crate::stencil::{east, west};

/// Face-centred fluxes, laid out as described in [`crate::stencil`].
#[derive(Debug, Clone, PartialEq)]
pub struct FluxField {
    pub jr_x: Array2<f64>,
    pub jr_y: Array2<f64>,
    pub jb_x: Array2<f64>,
    pub jb_y: Array2<f64>,
}

impl FluxField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            jr_x: Array2::zeros((nx, ny)),
            jr_y: Array2::zeros((nx, ny + 1)),
            jb_x: Array2::zeros((nx, ny)),
            jb_y: Array2::zeros((nx, ny + 1)),
        }
    }
}

/// Coefficients of each flux term once the variant is resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Coefficients {
    pub h: f64,
    pub gamma0: f64,
    /// `gamma1 + gamma2`.
    pub gsum: f64,
    pub alpha: f64,
    /// Lateral drift: reds move towards decreasing y with speed `kappa b (1 - rho)`.
    pub kappa: f64,
    /// Weight of the `(1 - rho) r d_x b` term in the lateral flux.
    pub mixed: f64,
}

impl Coefficients {
    pub fn new(p: &ModelParams, variant: Variant) -> Result<Self> {
        p.validate()?;
        let base = Self { h: p.h, gamma0: p.gamma0, gsum: p.gamma_sum(), alpha: p.alpha, kappa: 0.0, mixed: 0.0 };
        Ok(match variant {
            Variant::Full => Self { kappa: p.gamma1 - p.gamma2, mixed: p.gamma1 - p.gamma2, ..base },
            Variant::ReducedSym => {
                if p.gamma1 != p.gamma2 || p.alpha != 0.0 {
                    return Err(Error::Config(format!(
                        "reduced-sym needs gamma1 == gamma2 and alpha == 0, got gamma1 = {}, gamma2 = {}, alpha = {}",
                        p.gamma1, p.gamma2, p.alpha
                    )));
                }
                base
            }
            Variant::DodgeScaled => Self { kappa: p.h, ..base },
        })
    }
}

/// Assembles all face fluxes.
pub fn compute_fluxes(s: &State, p: &ModelParams, grid: &Grid, variant: Variant) -> Result<FluxField> {
    let c = Coefficients::new(p, variant)?;
    let (nx, ny) = s.shape();
    let mut f = FluxField::zeros(nx, ny);
    fluxes_into(s, &c, grid, &mut f);
    Ok(f)
}

// Drift terms take the moving density from the upwind cell and the vacancy from
// the receiving cell, so a full cell never receives mass. The remaining factor
// is averaged over the two cells. Cross-diffusion terms are central and written
// as `a_c (1 - q_n) - a_n (1 - q_c)`, which equals the averaged-coefficient form.
pub(crate) fn fluxes_into(s: &State, c: &Coefficients, grid: &Grid, f: &mut FluxField) {
    let (nx, ny) = s.shape();
    let (dx, dy) = (grid.dx(), grid.dy());
    let (r, b) = (&s.r, &s.b);
    let hx = c.h / (2.0 * dx);
    let ax = c.h * c.alpha / (2.0 * dx);

    for i in 0..nx {
        let e = east(i, nx);
        for j in 0..ny {
            let (rc, re, bc, be) = (r[[i, j]], r[[e, j]], b[[i, j]], b[[e, j]]);
            let (wc, we) = (1.0 - rc - bc, 1.0 - re - be);

            let red_drift = rc * we * (1.0 + c.alpha * 0.5 * (rc + re));
            let red_cross = hx * (rc * (1.0 - be) - re * (1.0 - bc));
            let red_cohesion = ax * (re * re * we - rc * rc * wc);
            f.jr_x[[i, j]] = red_drift + red_cross + red_cohesion;

            let blue_drift = -be * wc * (1.0 + c.alpha * 0.5 * (bc + be));
            let blue_cross = hx * (bc * (1.0 - re) - be * (1.0 - rc));
            let blue_cohesion = ax * (be * be * we - bc * bc * wc);
            f.jb_x[[i, j]] = blue_drift + blue_cross + blue_cohesion;
        }
    }

    let g0 = c.h * c.gamma0 / dy;
    let gq = c.h * c.gsum / (2.0 * dy);
    let mx = c.h * c.mixed;
    for i in 0..nx {
        f.jr_y[[i, 0]] = 0.0;
        f.jb_y[[i, 0]] = 0.0;
        f.jr_y[[i, ny]] = 0.0;
        f.jb_y[[i, ny]] = 0.0;
        for j in 1..ny {
            let m = j - 1;
            let (rc, rn, bc, bn) = (r[[i, m]], r[[i, j]], b[[i, m]], b[[i, j]]);
            let (wc, wn) = (1.0 - rc - bc, 1.0 - rn - bn);
            let (qc, qn) = (rc * bc, rn * bn);

            let (red_drift, blue_drift) = if c.kappa >= 0.0 {
                (-c.kappa * rn * wc * 0.5 * (bc + bn), c.kappa * bc * wn * 0.5 * (rc + rn))
            } else {
                (-c.kappa * rc * wn * 0.5 * (bc + bn), c.kappa * bn * wc * 0.5 * (rc + rn))
            };
            let dodge = gq * (qc * wn - qn * wc);
            let red_lateral = g0 * (rc * (1.0 - bn) - rn * (1.0 - bc));
            let blue_lateral = g0 * (bc * (1.0 - rn) - bn * (1.0 - rc));

            let (mut red_mixed, mut blue_mixed) = (0.0, 0.0);
            if c.mixed != 0.0 {
                let (ie, iw) = (east(i, nx), west(i, nx));
                let ddx = |a: &Array2<f64>| 0.25 * (a[[ie, m]] - a[[iw, m]] + a[[ie, j]] - a[[iw, j]]) / dx;
                let w_face = 0.5 * (wc + wn);
                red_mixed = -mx * w_face * 0.5 * (rc + rn) * ddx(b);
                blue_mixed = -mx * w_face * 0.5 * (bc + bn) * ddx(r);
            }

            f.jr_y[[i, j]] = red_drift + dodge + red_lateral + red_mixed;
            f.jb_y[[i, j]] = blue_drift + dodge + blue_lateral + blue_mixed;
        }
    }
}

use nalgebra::{Matrix4, SymmetricEigen, Vector4};

use crate::model::ModelParams;

/// Per-point coefficient matrices of the entropy-variable formulation, ordered
/// `(d_x u, d_y u, d_x v, d_y v)`. The symmetric dodge rate is taken as the mean
/// of `gamma1` and `gamma2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityMatrices {
    pub g: Matrix4<f64>,
    pub h: Vector4<f64>,
    pub m: Matrix4<f64>,
}

/// `G` and `H` with `-J = G grad(u, v) + H` for the reduced model.
pub fn assemble_g_h(r: f64, b: f64, p: &ModelParams) -> (Matrix4<f64>, Vector4<f64>) {
    let (g0, g) = (p.gamma0, 0.5 * p.gamma_sum());
    let w = 1.0 - r - b;
    let d = 2.0 - r - b;
    let k = 0.5 * p.h;
    let rb = r * b;
    #[rustfmt::skip]
    let gm = Matrix4::new(
        k * w * r * (2.0 - b) / d, 0.0, k * w * rb / d, 0.0,
        0.0, 2.0 * k * w * r * (g0 * (2.0 - b) / d + g * b), 0.0, 2.0 * k * w * rb * (g0 / d + g),
        k * w * rb / d, 0.0, k * w * b * (2.0 - r) / d, 0.0,
        0.0, 2.0 * k * w * rb * (g0 / d + g), 0.0, 2.0 * k * w * b * (g0 * (2.0 - r) / d + g * r),
    );
    let hv = Vector4::new(w * r * (r - b) / d, 0.0, w * b * (r - b) / d, 0.0);
    (gm, hv)
}

/// Mobility of the entropy-variable form `(h/2) div(M grad(u, v) + extra)`.
pub fn assemble_m(r: f64, b: f64, p: &ModelParams) -> Matrix4<f64> {
    let (g0, g) = (p.gamma0, 0.5 * p.gamma_sum());
    let w = 1.0 - r - b;
    let c = 2.0 * g * w * r * b;
    #[rustfmt::skip]
    let m = Matrix4::new(
        w * r, 0.0, 0.0, 0.0,
        0.0, 2.0 * g0 * w * r + c, 0.0, c,
        0.0, 0.0, w * b, 0.0,
        0.0, c, 0.0, 2.0 * g0 * w * b + c,
    );
    m
}

impl MobilityMatrices {
    pub fn at(r: f64, b: f64, p: &ModelParams) -> Self {
        let (g, h) = assemble_g_h(r, b, p);
        Self { g, h, m: assemble_m(r, b, p) }
    }
}

/// Smallest eigenvalue of the symmetric part of `a`.
pub fn min_symmetric_eigenvalue(a: &Matrix4<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

#![allow(dead_code)]

use laneform_core::ModelParams;
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Literal transcription of the two master equations with every rate written
/// out in full. Periodic in i, nothing crosses j = 0 or j = ny - 1.
pub fn oracle_step(r: &Array2<f64>, b: &Array2<f64>, p: &ModelParams, lam: f64) -> (Array2<f64>, Array2<f64>) {
    let (nx, ny) = r.dim();
    let w = |i: i64| i.rem_euclid(nx as i64) as usize;
    let rho = |i: i64, j: i64| r[[w(i), j as usize]] + b[[w(i), j as usize]];
    let inside = |j: i64| j >= 0 && j < ny as i64;

    // Red rates out of (i, j) towards the named neighbour.
    let tr_right = |i: i64, j: i64| lam * (1.0 - rho(i + 1, j)) * (1.0 + p.alpha * r[[w(i + 2), j as usize]]);
    let tr_down = |i: i64, j: i64| {
        if inside(j - 1) {
            lam * (1.0 - rho(i, j - 1)) * (p.gamma0 + p.gamma1 * b[[w(i + 1), j as usize]])
        } else {
            0.0
        }
    };
    let tr_up = |i: i64, j: i64| {
        if inside(j + 1) {
            lam * (1.0 - rho(i, j + 1)) * (p.gamma0 + p.gamma2 * b[[w(i + 1), j as usize]])
        } else {
            0.0
        }
    };
    // Blue rates out of (i, j).
    let tb_left = |i: i64, j: i64| lam * (1.0 - rho(i - 1, j)) * (1.0 + p.alpha * b[[w(i - 2), j as usize]]);
    let tb_up = |i: i64, j: i64| {
        if inside(j + 1) {
            lam * (1.0 - rho(i, j + 1)) * (p.gamma0 + p.gamma1 * r[[w(i - 1), j as usize]])
        } else {
            0.0
        }
    };
    let tb_down = |i: i64, j: i64| {
        if inside(j - 1) {
            lam * (1.0 - rho(i, j - 1)) * (p.gamma0 + p.gamma2 * r[[w(i - 1), j as usize]])
        } else {
            0.0
        }
    };
    let rv = |i: i64, j: i64| if inside(j) { r[[w(i), j as usize]] } else { 0.0 };
    let bv = |i: i64, j: i64| if inside(j) { b[[w(i), j as usize]] } else { 0.0 };

    let mut r1 = r.clone();
    let mut b1 = b.clone();
    for i in 0..nx as i64 {
        for j in 0..ny as i64 {
            let from_left = tr_right(i - 1, j) * rv(i - 1, j);
            let from_above = if inside(j + 1) { tr_down(i, j + 1) * rv(i, j + 1) } else { 0.0 };
            let from_below = if inside(j - 1) { tr_up(i, j - 1) * rv(i, j - 1) } else { 0.0 };
            let out = (tr_right(i, j) + tr_down(i, j) + tr_up(i, j)) * rv(i, j);
            r1[[i as usize, j as usize]] = rv(i, j) + from_left + from_above + from_below - out;

            let from_right = tb_left(i + 1, j) * bv(i + 1, j);
            let from_below = if inside(j - 1) { tb_up(i, j - 1) * bv(i, j - 1) } else { 0.0 };
            let from_above = if inside(j + 1) { tb_down(i, j + 1) * bv(i, j + 1) } else { 0.0 };
            let out = (tb_left(i, j) + tb_up(i, j) + tb_down(i, j)) * bv(i, j);
            b1[[i as usize, j as usize]] = bv(i, j) + from_right + from_below + from_above - out;
        }
    }
    (r1, b1)
}

pub fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    ModelParams::new(rng.random_range(0.01..1.0), rng.random(), rng.random(), rng.random(), 0.5 * rng.random::<f64>())
}

/// Admissible probabilities, with a share of cells on the edges of the box.
pub fn random_fields(dim: (usize, usize), rng: &mut ChaCha8Rng) -> (Array2<f64>, Array2<f64>) {
    let mut r = Array2::zeros(dim);
    let mut b = Array2::zeros(dim);
    for ij in ndarray::indices(dim) {
        let (x, y): (f64, f64) = match rng.random_range(0..6) {
            0 => (0.0, 0.0),
            1 => (1.0, 0.0),
            2 => (0.0, 1.0),
            3 => {
                let x = rng.random();
                (x, 1.0 - x)
            }
            _ => (rng.random(), rng.random()),
        };
        let (x, y) = if x + y > 1.0 { (1.0 - x, 1.0 - y) } else { (x, y) };
        r[ij] = x;
        b[ij] = y;
    }
    (r, b)
}

pub fn max_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

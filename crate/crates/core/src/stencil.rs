//! Neighbour lookup and difference operators for the corridor: periodic in x,
//! walled in y. Every discrete operator in the crate goes through here.
//!
//! Face arrays follow one convention. `fx[[i, j]]` is the flux through the face
//! between cell `i` and its east neighbour. `fy[[i, j]]` is the flux through the
//! face below cell `j`, so `fy` has `ny + 1` columns and columns `0` and `ny`
//! are the walls.

use ndarray::{Array2, Zip};

#[inline]
pub fn east(i: usize, nx: usize) -> usize {
    if i + 1 == nx {
        0
    } else {
        i + 1
    }
}

#[inline]
pub fn west(i: usize, nx: usize) -> usize {
    if i == 0 {
        nx - 1
    } else {
        i - 1
    }
}

/// Periodic index `i + k`.
#[inline]
pub fn shift(i: usize, k: isize, nx: usize) -> usize {
    (i as isize + k).rem_euclid(nx as isize) as usize
}

/// Cell above `j`, if it is not behind the top wall.
#[inline]
pub fn north(j: usize, ny: usize) -> Option<usize> {
    (j + 1 < ny).then_some(j + 1)
}

/// Cell below `j`, if it is not behind the bottom wall.
#[inline]
pub fn south(j: usize) -> Option<usize> {
    j.checked_sub(1)
}

/// Conservative divergence of face fluxes into `out`.
pub fn divergence_into(fx: &Array2<f64>, fy: &Array2<f64>, dx: f64, dy: f64, out: &mut Array2<f64>) {
    let (nx, ny) = out.dim();
    for i in 0..nx {
        let w = west(i, nx);
        for j in 0..ny {
            out[[i, j]] = (fx[[i, j]] - fx[[w, j]]) / dx + (fy[[i, j + 1]] - fy[[i, j]]) / dy;
        }
    }
}

pub fn divergence(fx: &Array2<f64>, fy: &Array2<f64>, dx: f64, dy: f64) -> Array2<f64> {
    let mut out = Array2::zeros(fx.dim());
    divergence_into(fx, fy, dx, dy, &mut out);
    out
}

/// Five-point Laplacian with no-flux walls.
pub fn laplacian(u: &Array2<f64>, dx: f64, dy: f64) -> Array2<f64> {
    let (nx, ny) = u.dim();
    let mut fx = Array2::zeros((nx, ny));
    let mut fy = Array2::zeros((nx, ny + 1));
    for i in 0..nx {
        let e = east(i, nx);
        for j in 0..ny {
            fx[[i, j]] = -(u[[e, j]] - u[[i, j]]) / dx;
            if j > 0 {
                fy[[i, j]] = -(u[[i, j]] - u[[i, j - 1]]) / dy;
            }
        }
    }
    let mut out = divergence(&fx, &fy, dx, dy);
    out.mapv_inplace(|x| -x);
    out
}

/// Central x-derivative at cell centres.
pub fn grad_x(f: &Array2<f64>, dx: f64) -> Array2<f64> {
    let (nx, ny) = f.dim();
    Array2::from_shape_fn((nx, ny), |(i, j)| (f[[east(i, nx), j]] - f[[west(i, nx), j]]) / (2.0 * dx))
}

/// Central y-derivative at cell centres; the wall ghost mirrors the boundary cell.
pub fn grad_y(f: &Array2<f64>, dy: f64) -> Array2<f64> {
    let (nx, ny) = f.dim();
    Array2::from_shape_fn((nx, ny), |(i, j)| {
        let up = north(j, ny).unwrap_or(j);
        let dn = south(j).unwrap_or(j);
        (f[[i, up]] - f[[i, dn]]) / (2.0 * dy)
    })
}

/// Average over x for each row `j`.
pub fn x_average(f: &Array2<f64>) -> Vec<f64> {
    let nx = f.nrows() as f64;
    f.columns().into_iter().map(|c| c.sum() / nx).collect()
}

/// `a + s * b` elementwise, in place on `a`.
pub fn axpy(a: &mut Array2<f64>, s: f64, b: &Array2<f64>) {
    Zip::from(a).and(b).for_each(|a, &b| *a += s * b);
}

use serde::Serialize;

use crate::model::{Grid, ModelParams, State};
use crate::stencil::x_average;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Lanes {
    Strong,
    Weak,
    None,
}

impl std::fmt::Display for Lanes {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Lanes::Strong => "strong",
            Lanes::Weak => "weak",
            Lanes::None => "none",
        })
    }
}

/// Which species is expected near the bottom wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    RedBelow,
    RedAbove,
}

impl Orientation {
    /// Reds dodge downwards unless the upward dodge rate is larger.
    pub fn of(p: &ModelParams) -> Self {
        if p.gamma2 > p.gamma1 {
            Orientation::RedAbove
        } else {
            Orientation::RedBelow
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneTolerances {
    pub support_tol: f64,
    pub mono_tol: f64,
}

impl Default for LaneTolerances {
    fn default() -> Self {
        Self { support_tol: 1e-6, mono_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaneReport {
    pub classification: Lanes,
    pub crossing_y: Option<f64>,
    /// Largest increase of the x-averaged red profile (or decrease of the blue
    /// one) between neighbouring rows, in the expected direction; 0 if monotone.
    pub monotonicity_defect: f64,
    /// `int r b dA`.
    pub overlap: f64,
    /// Distance between the topmost red row and the lowest blue row (strong case).
    pub support_gap: Option<f64>,
    pub red_profile: Vec<f64>,
    pub blue_profile: Vec<f64>,
}

/// Classifies the x-averaged profiles as strong lanes, weak lanes or neither.
pub fn classify_lanes(s: &State, grid: &Grid, tols: &LaneTolerances, orientation: Orientation) -> LaneReport {
    let red_profile = x_average(&s.r);
    let blue_profile = x_average(&s.b);
    let overlap = (&s.r * &s.b).sum() * grid.cell_area();
    let ny = red_profile.len();

    // Work bottom-to-top in the orientation where reds sit below.
    let (mut rp, mut bp) = (red_profile.clone(), blue_profile.clone());
    let ys: Vec<f64> = match orientation {
        Orientation::RedBelow => (0..ny).map(|j| grid.y(j)).collect(),
        Orientation::RedAbove => {
            rp.reverse();
            bp.reverse();
            (0..ny).rev().map(|j| grid.y(j)).collect()
        }
    };

    let mut defect: f64 = 0.0;
    for j in 1..ny {
        defect = defect.max(rp[j] - rp[j - 1]).max(bp[j - 1] - bp[j]);
    }

    let report = |classification, crossing_y, support_gap| LaneReport {
        classification,
        crossing_y,
        monotonicity_defect: defect,
        overlap,
        support_gap,
        red_profile: red_profile.clone(),
        blue_profile: blue_profile.clone(),
    };

    let top_red = (0..ny).rev().find(|&j| rp[j] > tols.support_tol);
    let low_blue = (0..ny).find(|&j| bp[j] > tols.support_tol);
    if let (Some(tr), Some(lb)) = (top_red, low_blue) {
        if tr < lb {
            return report(Lanes::Strong, None, Some((ys[lb] - ys[tr]).abs()));
        }
    }

    let d: Vec<f64> = rp.iter().zip(&bp).map(|(r, b)| r - b).collect();
    let down: Vec<usize> = (1..ny).filter(|&j| d[j - 1] > 0.0 && d[j] <= 0.0).collect();
    let up = (1..ny).any(|j| d[j - 1] <= 0.0 && d[j] > 0.0);
    let separated = ny >= 2 && d[0] > tols.support_tol && d[ny - 1] < -tols.support_tol;
    let unique = separated && down.len() == 1 && !up;
    if defect <= tols.mono_tol && unique {
        let k = down[0];
        let t = d[k - 1] / (d[k - 1] - d[k]);
        let y = ys[k - 1] + t * (ys[k] - ys[k - 1]);
        return report(Lanes::Weak, Some(y), None);
    }
    report(Lanes::None, None, None)
}

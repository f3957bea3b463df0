//! Entropy balance, lane classification and lattice/continuum comparison.

mod compare;
mod entropy;
mod lanes;

pub use compare::{coarsen, compare_micro_macro, refinement_study, CompareRow, LevelResult, RefinementPlan};
pub use entropy::{
    dissipation, entropy, entropy_growth_check, entropy_report, growth_rates, Dissipation, Entropy, EntropyReport,
    GrowthCheck,
};
pub use lanes::{classify_lanes, LaneReport, LaneTolerances, Lanes, Orientation};

use crate::model::{Grid, State};

/// Rightward transport of reds, `int (1 - rho) r dA`.
pub fn throughput(s: &State, grid: &Grid) -> f64 {
    s.r.iter().zip(&s.b).map(|(&r, &b)| (1.0 - r - b) * r).sum::<f64>() * grid.cell_area()
}

//! Shared inputs for the kernel benchmarks.

use laneform_core::{Grid, ModelParams, Scenario, ScenarioConfig, State};

/// Lane-formation preset on an `nx` by `ny` corridor.
pub fn lanes_case(nx: usize, ny: usize) -> (ScenarioConfig, State) {
    let mut cfg = Scenario::Lanes.preset();
    cfg.grid = Grid::corridor(nx, ny);
    let s = cfg.initial_state().expect("preset initial state is admissible");
    (cfg, s)
}

/// Equilibration preset, which the implicit scheme accepts.
pub fn equilibration_case() -> (ScenarioConfig, State) {
    let cfg = Scenario::Equilibration.preset();
    let s = cfg.initial_state().expect("preset initial state is admissible");
    (cfg, s)
}

/// Parameters used for the steady profile benchmarks.
pub fn profile_params() -> ModelParams {
    ModelParams::new(0.1, 0.001, 0.5, 0.4, 0.0)
}

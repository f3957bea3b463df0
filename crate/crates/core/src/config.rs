//! Run configuration read from JSON, and the built-in corridor scenarios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{make_initial, Grid, InitialCondition, ModelParams, State};
use crate::pde::{SolverConfig, Variant};

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Physical time between snapshots; only the start and end are written if unset.
    #[serde(default)]
    pub every: Option<f64>,
    /// Write per-cell snapshot files (the time series is always written).
    #[serde(default = "yes")]
    pub snapshots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { every: None, snapshots: true }
    }
}

fn default_members() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// Trajectories in a stochastic ensemble.
    #[serde(default = "default_members")]
    pub members: usize,
    /// Overrides the default uniform rate factor.
    #[serde(default)]
    pub rate_scale: Option<f64>,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { members: default_members(), rate_scale: None }
    }
}

fn default_profile_dy() -> f64 {
    1e-4
}

fn default_curves() -> Vec<f64> {
    vec![0.005, 0.01, 0.02, 0.05, 0.1, 0.2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryConfig {
    #[serde(default = "default_profile_dy")]
    pub dy: f64,
    /// Target masses `[m_r, m_b]`; taken from the initial condition if unset.
    #[serde(default)]
    pub masses: Option<[f64; 2]>,
    /// Curve constants for the phase-plane family.
    #[serde(default = "default_curves")]
    pub curves: Vec<f64>,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self { dy: default_profile_dy(), masses: None, curves: default_curves() }
    }
}

fn three() -> usize {
    3
}

fn four() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// Number of refinement levels; each halves `h` and doubles both cell counts.
    #[serde(default = "three")]
    pub levels: usize,
    /// PDE cells per lattice cell along each axis.
    #[serde(default = "four")]
    pub pde_refine: usize,
    /// Coarsest lattice spacing; the grid is rebuilt with cells of this size.
    /// If unset the run grid is used and its spacing must equal `params.h`.
    #[serde(default)]
    pub h: Option<f64>,
    /// Matched final time; defaults to `t_end`.
    #[serde(default)]
    pub t_end: Option<f64>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self { levels: three(), pde_refine: four(), h: None, t_end: None }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub params: ModelParams,
    pub grid: Grid,
    pub initial: InitialCondition,
    pub t_end: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub stationary: StationaryConfig,
    #[serde(default)]
    pub compare: CompareConfig,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.grid.validate()?;
        self.solver.validate()?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be finite and nonnegative, got {}", self.t_end)));
        }
        if let Some(e) = self.output.every {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Config("output.every must be positive".into()));
            }
        }
        if let Some(l) = self.lattice.rate_scale {
            if !(l > 0.0 && l <= 1.0) {
                return Err(Error::Config("lattice.rate_scale must lie in (0, 1]".into()));
            }
        }
        if !(self.stationary.dy > 0.0) {
            return Err(Error::Config("stationary.dy must be positive".into()));
        }
        if self.compare.levels == 0 || self.compare.pde_refine == 0 {
            return Err(Error::Config("compare.levels and compare.pde_refine must be at least 1".into()));
        }
        if let Some(h) = self.compare.h {
            if !(h > 0.0 && h <= 1.0) {
                return Err(Error::Config("compare.h must lie in (0, 1]".into()));
            }
        }
        make_initial(&self.initial, &self.grid).map(|_| ())
    }

    pub fn initial_state(&self) -> Result<State> {
        make_initial(&self.initial, &self.grid)
    }

    /// Parameters and grid for the coarsest level of a lattice comparison.
    pub fn compare_base(&self) -> Result<(ModelParams, Grid)> {
        let Some(h) = self.compare.h else {
            return Ok((self.params, self.grid));
        };
        let cells = |len: f64| {
            let n = (len / h).round();
            if n >= 1.0 && (n * h - len).abs() <= 1e-9 * len {
                Ok(n as usize)
            } else {
                Err(Error::Config(format!("compare.h = {h} does not divide a side of length {len}")))
            }
        };
        let grid = Grid { nx: cells(self.grid.width())?, ny: cells(self.grid.height())?, ..self.grid };
        Ok((ModelParams { h, ..self.params }, grid))
    }
}

/// The three built-in corridor experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Symmetric dodging: a perturbed uniform state relaxes back.
    Equilibration,
    /// Right-preferring dodging with cohesion: lanes form.
    Lanes,
    /// Almost no undirected lateral motion at high density: the flow jams.
    Jam,
}

/// Uniform density per species in the jam scenario.
pub const JAM_DENSITY: f64 = 0.495;

impl Scenario {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "I" | "1" => Some(Self::Equilibration),
            "II" | "2" => Some(Self::Lanes),
            "III" | "3" => Some(Self::Jam),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Equilibration => "I",
            Self::Lanes => "II",
            Self::Jam => "III",
        }
    }

    pub fn preset(&self) -> ScenarioConfig {
        let grid = Grid::corridor(100, 10);
        let base = |params, c, variant, t_end, every| ScenarioConfig {
            params,
            grid,
            initial: InitialCondition::Sinusoidal { c_r: c, c_b: c, amplitude: 0.02 },
            t_end,
            solver: SolverConfig::explicit(variant),
            output: OutputConfig { every: Some(every), snapshots: true },
            seed: 0,
            lattice: LatticeConfig::default(),
            stationary: StationaryConfig::default(),
            compare: CompareConfig::default(),
        };
        match self {
            Self::Equilibration => {
                let mut cfg = base(ModelParams::symmetric(0.3, 0.1, 0.2), 0.4, Variant::ReducedSym, 5.0, 0.25);
                cfg.compare.h = Some(0.025);
                cfg.compare.t_end = Some(0.1);
                cfg
            }
            Self::Lanes => base(ModelParams::new(0.1, 0.001, 0.5, 0.4, 0.2), 0.4, Variant::DodgeScaled, 100.0, 1.0),
            Self::Jam => base(ModelParams::new(0.1, 0.0001, 0.5, 0.4, 0.2), JAM_DENSITY, Variant::DodgeScaled, 100.0, 1.0),
        }
    }
}

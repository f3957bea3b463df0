//! One function per run kind. Each writes its artifacts under `dir` and
//! returns the figures that go into a sweep summary.

use std::path::Path;

use anyhow::{Context, Result};
use laneform_core::diagnostics::{
    classify_lanes, entropy_growth_check, entropy_report, refinement_study, throughput, EntropyReport, LaneReport,
    LaneTolerances, Orientation, RefinementPlan,
};
use laneform_core::lattice::{ensemble_mean, grid_matches_spacing, master_step, scale_rates, steps_for_time, LatticeState};
use laneform_core::pde::{run_pde, stability_dt};
use laneform_core::stationary::{curve_constant, match_masses, sweep_curves, CurveOptions};
use laneform_core::{Error, Grid, ModelParams, Scheme, ScenarioConfig, State};
use serde_json::{json, Value};

use crate::artifacts::{fmt_f, fmt_opt, Artifacts, Csv};

/// Points written per phase-plane curve, at most.
const CURVE_POINTS: usize = 2000;
const GROWTH_TOL: f64 = 1e-3;
const SERIES_HEADER: [&str; 8] = ["t", "mass_r", "mass_b", "entropy", "dissipation", "max_rho", "min_r", "min_b"];

/// Figures reported for every run kind; entries that do not apply stay empty.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub mass_r: Option<f64>,
    pub mass_b: Option<f64>,
    pub min_r: Option<f64>,
    pub min_b: Option<f64>,
    pub max_rho: Option<f64>,
    pub overlap: Option<f64>,
    pub crossing_y: Option<f64>,
    pub lanes: Option<String>,
    pub throughput: Option<f64>,
}

impl Summary {
    pub const HEADER: [&'static str; 9] =
        ["mass_r", "mass_b", "min_r", "min_b", "max_rho", "overlap", "crossing_y", "lanes", "throughput"];

    pub fn fields(&self) -> Vec<String> {
        let mut v: Vec<String> =
            [self.mass_r, self.mass_b, self.min_r, self.min_b, self.max_rho, self.overlap, self.crossing_y]
                .into_iter()
                .map(fmt_opt)
                .collect();
        v.push(self.lanes.clone().unwrap_or_default());
        v.push(fmt_opt(self.throughput));
        v
    }

    fn of_state(s: &State, g: &Grid, lanes: &LaneReport) -> Self {
        Self {
            mass_r: Some(s.mass_r(g)),
            mass_b: Some(s.mass_b(g)),
            min_r: Some(s.min_r()),
            min_b: Some(s.min_b()),
            max_rho: Some(s.max_rho()),
            overlap: Some(lanes.overlap),
            crossing_y: lanes.crossing_y,
            lanes: Some(lanes.classification.to_string()),
            throughput: Some(throughput(s, g)),
        }
    }
}

fn lanes_of(s: &State, g: &Grid, p: &ModelParams) -> LaneReport {
    classify_lanes(s, g, &LaneTolerances::default(), Orientation::of(p))
}

fn lanes_json(l: &LaneReport) -> Value {
    json!({
        "classification": l.classification,
        "crossing_y": l.crossing_y,
        "overlap": l.overlap,
        "monotonicity_defect": l.monotonicity_defect,
        "support_gap": l.support_gap,
    })
}

fn sup_deviation(s: &State) -> f64 {
    let dev = |xs: Vec<f64>| {
        let mean = xs.iter().sum::<f64>() / xs.len().max(1) as f64;
        xs.iter().fold(0.0_f64, |m, &x| m.max((x - mean).abs()))
    };
    dev(s.r.iter().copied().collect()).max(dev(s.b.iter().copied().collect()))
}

fn write_fields(out: &Artifacts, rel: &Path, s: &State, g: &Grid, with_rho: bool) -> Result<()> {
    let header: &[&str] = if with_rho { &["i", "j", "x", "y", "r", "b", "rho"] } else { &["i", "j", "x", "y", "r", "b"] };
    let mut csv = out.csv(rel, header)?;
    let (nx, ny) = s.shape();
    for i in 0..nx {
        for j in 0..ny {
            let (r, b) = (s.r[[i, j]], s.b[[i, j]]);
            let mut row = vec![i.to_string(), j.to_string(), fmt_f(g.x(i)), fmt_f(g.y(j)), fmt_f(r), fmt_f(b)];
            if with_rho {
                row.push(fmt_f(r + b));
            }
            csv.row(&row)?;
        }
    }
    csv.finish()?;
    Ok(())
}

/// Running extremes and mass drift over the emitted states.
struct Tracker {
    mass0: (f64, f64),
    drift: (f64, f64),
    min_r: f64,
    min_b: f64,
    min_rho: f64,
    max_rho: f64,
    series: Vec<EntropyReport>,
}

impl Tracker {
    fn new(s0: &State, g: &Grid) -> Self {
        Self {
            mass0: (s0.mass_r(g), s0.mass_b(g)),
            drift: (0.0, 0.0),
            min_r: f64::INFINITY,
            min_b: f64::INFINITY,
            min_rho: f64::INFINITY,
            max_rho: f64::NEG_INFINITY,
            series: Vec::new(),
        }
    }

    /// Records one state and appends its time-series row.
    fn observe(&mut self, s: &State, g: &Grid, p: &ModelParams, ts: &mut Csv) -> std::io::Result<EntropyReport> {
        let rep = entropy_report(s, g, p);
        let (mr, mb) = (s.mass_r(g), s.mass_b(g));
        let rel = |m: f64, m0: f64| if m0 > 0.0 { (m - m0).abs() / m0 } else { (m - m0).abs() };
        self.drift.0 = self.drift.0.max(rel(mr, self.mass0.0));
        self.drift.1 = self.drift.1.max(rel(mb, self.mass0.1));
        let rho = s.rho();
        self.min_r = self.min_r.min(s.min_r());
        self.min_b = self.min_b.min(s.min_b());
        self.min_rho = self.min_rho.min(rho.fold(f64::INFINITY, |m, &x| m.min(x)));
        self.max_rho = self.max_rho.max(s.max_rho());
        self.series.push(rep);
        ts.row(&[rep.t, mr, mb, rep.entropy.total, rep.d1, s.max_rho(), s.min_r(), s.min_b()].map(fmt_f))?;
        Ok(rep)
    }

    fn json(&self) -> Value {
        let growth = entropy_growth_check(&self.series, GROWTH_TOL);
        json!({
            "mass_drift": { "r": self.drift.0, "b": self.drift.1 },
            "min_r": self.min_r,
            "min_b": self.min_b,
            "min_rho": self.min_rho,
            "max_rho": self.max_rho,
            "entropy_growth": growth,
            "max_entropy_growth": growth.map(|g| g.c_fit),
        })
    }
}

/// Explicit or implicit continuum run with snapshots, time series and report.
pub fn pde(cfg: &ScenarioConfig, out: &Artifacts, dir: &Path) -> Result<Summary> {
    let (p, g, solver) = (&cfg.params, &cfg.grid, &cfg.solver);
    let s0 = cfg.initial_state()?;
    let nominal = match solver.scheme {
        Scheme::Explicit => match solver.dt {
            Some(dt) => dt,
            None => stability_dt(p, g, solver.variant, solver.cfl_safety)?,
        },
        Scheme::ImplicitEntropy => solver.tau,
    };
    let mut ts = out.csv(dir.join("timeseries.csv"), &SERIES_HEADER)?;
    let mut tracker = Tracker::new(&s0, g);
    let mut emitted = 0usize;
    let mut sink_error = None;
    let mut emit = |s: &State, step: u64| -> Result<()> {
        let rep = tracker.observe(s, g, p, &mut ts)?;
        if cfg.output.snapshots {
            let name = format!("snapshot_{emitted:05}");
            write_fields(out, &dir.join(format!("{name}.csv")), s, g, true)?;
            out.json(
                dir.join(format!("{name}.json")),
                json!({
                    "params": p,
                    "variant": solver.variant,
                    "scheme": solver.scheme,
                    "dt": nominal,
                    "step": step,
                    "t": s.t,
                    "entropy": rep.entropy.total,
                    "mass_r": s.mass_r(g),
                    "mass_b": s.mass_b(g),
                }),
            )?;
        }
        emitted += 1;
        Ok(())
    };
    let run = run_pde(&s0, p, g, solver, cfg.t_end, cfg.output.every, |s, step| {
        emit(s, step).map_err(|e| {
            sink_error = Some(e);
            Error::Config("output sink failed".into())
        })
    });
    if let Some(e) = sink_error {
        return Err(e);
    }
    let run = run?;
    ts.finish()?;

    let last = &run.state;
    let lanes = lanes_of(last, g, p);
    let mut report = json!({
        "t": last.t,
        "steps": run.steps,
        "dt": run.dt,
        "iterations": run.iterations,
        "lanes": lanes_json(&lanes),
        "classification": lanes.classification,
        "crossing_y": lanes.crossing_y,
        "throughput_initial": throughput(&s0, g),
        "throughput_final": throughput(last, g),
        "deviation_initial": sup_deviation(&s0),
        "deviation_final": sup_deviation(last),
    });
    merge(&mut report, tracker.json());
    out.json(dir.join("report.json"), report)?;
    Ok(Summary::of_state(last, g, &lanes))
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn rate_scale(cfg: &ScenarioConfig) -> f64 {
    cfg.lattice.rate_scale.unwrap_or_else(|| scale_rates(&cfg.params))
}

/// Master-equation run of the occupation probabilities.
pub fn lattice(cfg: &ScenarioConfig, out: &Artifacts, dir: &Path) -> Result<Summary> {
    let (p, g) = (&cfg.params, &cfg.grid);
    if !grid_matches_spacing(p, g) {
        log::warn!("grid spacing {} x {} differs from the lattice spacing h = {}", g.dx(), g.dy(), p.h);
    }
    let s0 = cfg.initial_state()?;
    let lam = rate_scale(cfg);
    let steps = steps_for_time(cfg.t_end, p, lam);
    let every = cfg.output.every.map(|e| ((e / (lam * p.h)).round() as u64).max(1)).unwrap_or(steps.max(1));

    let mut ts = out.csv(dir.join("timeseries.csv"), &SERIES_HEADER)?;
    let mut tracker = Tracker::new(&s0, g);
    let mut emitted = 0usize;
    let mut emit = |l: &LatticeState| -> Result<()> {
        let s = l.to_state(p.h);
        tracker.observe(&s, g, p, &mut ts)?;
        if cfg.output.snapshots {
            let name = format!("lattice_{emitted:05}");
            write_fields(out, &dir.join(format!("{name}.csv")), &s, g, false)?;
            out.json(
                dir.join(format!("{name}.json")),
                json!({ "params": p, "rate_scale": lam, "step": l.step, "t": s.t, "seed": cfg.seed }),
            )?;
        }
        emitted += 1;
        Ok(())
    };
    let mut l = LatticeState::new(s0.r.clone(), s0.b.clone(), lam);
    emit(&l)?;
    for k in 1..=steps {
        l = master_step(&l, p)?;
        if k % every == 0 || k == steps {
            emit(&l)?;
        }
    }
    ts.finish()?;

    let last = l.to_state(p.h);
    let lanes = lanes_of(&last, g, p);
    let mut report = json!({
        "t": last.t,
        "steps": steps,
        "rate_scale": lam,
        "lanes": lanes_json(&lanes),
        "classification": lanes.classification,
        "crossing_y": lanes.crossing_y,
    });
    merge(&mut report, tracker.json());
    out.json(dir.join("report.json"), report)?;
    Ok(Summary::of_state(&last, g, &lanes))
}

/// Mean occupation of an ensemble of stochastic trajectories at `t_end`.
pub fn sample(cfg: &ScenarioConfig, out: &Artifacts, dir: &Path, workers: usize) -> Result<Summary> {
    let (p, g) = (&cfg.params, &cfg.grid);
    let s0 = cfg.initial_state()?;
    let lam = rate_scale(cfg);
    let sweeps = steps_for_time(cfg.t_end, p, lam) as usize;
    let members = cfg.lattice.members;
    if members == 0 {
        return Err(Error::Config("lattice.members must be at least 1".into()).into());
    }
    let init = LatticeState::new(s0.r.clone(), s0.b.clone(), lam);
    let (r, b) = ensemble_mean(&init, p, sweeps, members, cfg.seed, workers);
    let mean = State { r, b, t: sweeps as f64 * lam * p.h };
    write_fields(out, &dir.join("mean.csv"), &mean, g, false)?;
    out.json(
        dir.join("mean.json"),
        json!({
            "params": p,
            "rate_scale": lam,
            "step": sweeps,
            "t": mean.t,
            "seed": cfg.seed,
            "members": members,
        }),
    )?;
    let lanes = lanes_of(&mean, g, p);
    out.json(
        dir.join("report.json"),
        json!({
            "t": mean.t,
            "sweeps": sweeps,
            "members": members,
            "rate_scale": lam,
            "lanes": lanes_json(&lanes),
            "classification": lanes.classification,
            "crossing_y": lanes.crossing_y,
            "mass_r": mean.mass_r(g),
            "mass_b": mean.mass_b(g),
            "mass_r_initial": s0.mass_r(g),
            "mass_b_initial": s0.mass_b(g),
            "min_r": mean.min_r(),
            "min_b": mean.min_b(),
            "max_rho": mean.max_rho(),
        }),
    )?;
    Ok(Summary::of_state(&mean, g, &lanes))
}

/// Steady profile with the configured masses and the phase-plane curve family.
pub fn stationary(cfg: &ScenarioConfig, out: &Artifacts, dir: &Path) -> Result<Summary> {
    let (p, g, st) = (&cfg.params, &cfg.grid, &cfg.stationary);
    let [m_r, m_b] = match st.masses {
        Some(m) => m,
        None => {
            let s0 = cfg.initial_state()?;
            [s0.mass_r(g) / g.width(), s0.mass_b(g) / g.width()]
        }
    };
    let prof = match_masses(m_r, m_b, p, g, st.dy)?;
    let mut csv = out.csv(dir.join("profile.csv"), &["y", "r", "b", "rho", "C"])?;
    for k in 0..prof.len() {
        let (r, b) = (prof.r[k], prof.b[k]);
        csv.row(&[prof.y[k], r, b, r + b, curve_constant(r, b, p)?].map(fmt_f))?;
    }
    csv.finish()?;
    let (lr, lb) = prof.line_masses();
    let profile_info = json!({
        "params": p,
        "dy": st.dy,
        "target_masses": [m_r, m_b],
        "line_masses": [lr, lb],
        "C": prof.c,
        "C_drift": prof.c_drift(p),
        "truncated": prof.truncated,
        "crossing_y": prof.crossing(),
        "overlap": prof.overlap(),
        "max_product": prof.max_product(),
        "monotone": prof.r.windows(2).all(|w| w[1] <= w[0]) && prof.b.windows(2).all(|w| w[1] >= w[0]),
    });
    out.json(dir.join("profile.json"), profile_info.clone())?;

    let opts = CurveOptions { dy: st.dy, ..CurveOptions::default() };
    let curves = sweep_curves(p, &st.curves, &opts)?;
    let mut csv = out.csv(dir.join("curves.csv"), &["r", "b", "C"])?;
    let stride = |n: usize| n.div_ceil(CURVE_POINTS).max(1);
    for c in &curves {
        let (n, k) = (c.r.len(), stride(c.r.len()));
        for i in (0..n).filter(|&i| i % k == 0 || i + 1 == n) {
            csv.row(&[c.r[i], c.b[i], c.c].map(fmt_f))?;
        }
    }
    csv.finish()?;
    out.json(
        dir.join("curves.json"),
        json!({
            "params": p,
            "dy": st.dy,
            "floor": opts.floor,
            "curves": curves.iter().map(|c| json!({ "C": c.c, "points": c.r.len(), "stride": stride(c.r.len()) })).collect::<Vec<_>>(),
        }),
    )?;
    out.json(dir.join("report.json"), json!({ "profile": profile_info, "curves": curves.len() }))?;

    let rho = prof.r.iter().zip(&prof.b).map(|(r, b)| r + b);
    Ok(Summary {
        mass_r: Some(lr),
        mass_b: Some(lb),
        min_r: prof.r.iter().cloned().reduce(f64::min),
        min_b: prof.b.iter().cloned().reduce(f64::min),
        max_rho: rho.reduce(f64::max),
        overlap: Some(prof.overlap()),
        crossing_y: prof.crossing(),
        lanes: None,
        throughput: None,
    })
}

/// Lattice against PDE on successively refined spacings.
pub fn compare(cfg: &ScenarioConfig, out: &Artifacts, dir: &Path) -> Result<Summary> {
    let (p, g) = cfg.compare_base()?;
    let plan = RefinementPlan {
        levels: cfg.compare.levels,
        pde_refine: cfg.compare.pde_refine,
        t_end: cfg.compare.t_end.unwrap_or(cfg.t_end),
    };
    let rows = refinement_study(&p, &g, &cfg.initial, &cfg.solver, &plan).context("micro-macro comparison")?;
    let mut csv = out.csv(dir.join("compare.csv"), &["h", "nx", "ny", "lattice_steps", "t", "l2", "sup"])?;
    for r in &rows {
        csv.row(&[
            fmt_f(r.h),
            r.nx.to_string(),
            r.ny.to_string(),
            r.lattice_steps.to_string(),
            fmt_f(r.t),
            fmt_f(r.l2),
            fmt_f(r.sup),
        ])?;
    }
    csv.finish()?;
    let orders: Vec<f64> = rows.windows(2).map(|w| (w[0].l2 / w[1].l2).log2()).collect();
    out.json(
        dir.join("report.json"),
        json!({
            "params": p,
            "grid": g,
            "pde_refine": plan.pde_refine,
            "t_end": plan.t_end,
            "levels": rows,
            "observed_orders": orders,
            "l2_decreasing": rows.windows(2).all(|w| w[1].l2 < w[0].l2),
        }),
    )?;
    Ok(Summary::default())
}

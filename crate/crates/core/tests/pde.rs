use approx::assert_abs_diff_eq;
use laneform_core::pde::*;
use laneform_core::*;
use nalgebra::Matrix4;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sup_diff(a: &State, b: &State) -> f64 {
    let d = |x: &ndarray::Array2<f64>, y: &ndarray::Array2<f64>| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    d(&a.r, &b.r).max(d(&a.b, &b.b))
}

fn interior_sample(rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let r: f64 = rng.random();
        let b: f64 = rng.random();
        if r > 0.0 && b > 0.0 && r + b < 1.0 {
            return (r, b);
        }
    }
}

fn random_state(grid: &Grid, seed: u64, lo: f64, hi: f64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = State::zeros(grid);
    for v in s.r.iter_mut().chain(s.b.iter_mut()) {
        *v = rng.random_range(lo..hi);
    }
    s
}

#[test]
fn empty_state_has_zero_flux() {
    let g = Grid::corridor(6, 4);
    let p = ModelParams::new(0.1, 0.001, 0.5, 0.4, 0.2);
    for variant in [Variant::Full, Variant::DodgeScaled] {
        let f = compute_fluxes(&State::zeros(&g), &p, &g, variant).unwrap();
        for a in [&f.jr_x, &f.jr_y, &f.jb_x, &f.jb_y] {
            assert!(a.iter().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn constant_state_carries_uniform_drift_and_no_divergence() {
    let g = Grid::corridor(8, 4);
    let p = ModelParams::symmetric(0.3, 0.1, 0.2);
    let s = State::constant(&g, 0.4, 0.3);
    let f = compute_fluxes(&s, &p, &g, Variant::ReducedSym).unwrap();
    for &v in &f.jr_x {
        assert_abs_diff_eq!(v, 0.3 * 0.4, epsilon = 1e-15);
    }
    for &v in &f.jb_x {
        assert_abs_diff_eq!(v, -0.3 * 0.3, epsilon = 1e-15);
    }
    for &v in f.jr_y.iter().chain(&f.jb_y) {
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
    }
    let mut t = s.clone();
    ExplicitStepper::new(&p, &g, Variant::ReducedSym, 0.9).unwrap().step(&mut t, 1e-4).unwrap();
    assert!(sup_diff(&s, &t) <= 1e-15);
}

// Term-by-term evaluation of the face fluxes between cells (i, j) and their
// east / north neighbours, for the full variant.
struct FaceOracle {
    p: ModelParams,
    dx: f64,
    dy: f64,
}

impl FaceOracle {
    fn red_x(&self, c: (f64, f64), e: (f64, f64)) -> f64 {
        let ModelParams { h, alpha, .. } = self.p;
        let (rc, bc) = c;
        let (re, be) = e;
        let vac_e = 1.0 - re - be;
        let vac_c = 1.0 - rc - bc;
        let drift = rc * vac_e * (1.0 + alpha * (rc + re) / 2.0);
        let diffusion_r = -(h / 2.0) * ((1.0 - (bc + be) / 2.0) * (re - rc) / self.dx);
        let diffusion_b = -(h / 2.0) * ((rc + re) / 2.0) * (be - bc) / self.dx;
        let cohesion = (h * alpha / 2.0) * (re * re * vac_e - rc * rc * vac_c) / self.dx;
        drift + diffusion_r + diffusion_b + cohesion
    }

    fn red_y(&self, c: (f64, f64), n: (f64, f64), dbdx: f64) -> f64 {
        let ModelParams { h, gamma0, gamma1, gamma2, .. } = self.p;
        let (rc, bc) = c;
        let (rn, bn) = n;
        let (vc, vn) = (1.0 - rc - bc, 1.0 - rn - bn);
        let drift = -(gamma1 - gamma2) * rn * vc * (bc + bn) / 2.0;
        let lateral = -h * gamma0 * ((1.0 - (bc + bn) / 2.0) * (rn - rc) + (rc + rn) / 2.0 * (bn - bc)) / self.dy;
        let dodge = (h * (gamma1 + gamma2) / 2.0) * (rc * bc * vn - rn * bn * vc) / self.dy;
        let mixed = -h * (gamma1 - gamma2) * ((vc + vn) / 2.0) * ((rc + rn) / 2.0) * dbdx;
        drift + lateral + dodge + mixed
    }
}

#[test]
fn face_fluxes_match_a_term_by_term_oracle() {
    let g = Grid::corridor(4, 3);
    let p = ModelParams::new(0.1, 0.01, 0.5, 0.4, 0.2);
    let s = random_state(&g, 3, 0.05, 0.45);
    let f = compute_fluxes(&s, &p, &g, Variant::Full).unwrap();
    let o = FaceOracle { p, dx: g.dx(), dy: g.dy() };
    let at = |i: usize, j: usize| (s.r[[i, j]], s.b[[i, j]]);
    for i in 0..4 {
        let e = (i + 1) % 4;
        let w = (i + 3) % 4;
        for j in 0..3 {
            assert_abs_diff_eq!(f.jr_x[[i, j]], o.red_x(at(i, j), at(e, j)), epsilon = 1e-14);
        }
        for j in 1..3 {
            let dbdx = (s.b[[e, j - 1]] - s.b[[w, j - 1]] + s.b[[e, j]] - s.b[[w, j]]) / (4.0 * g.dx());
            assert_abs_diff_eq!(f.jr_y[[i, j]], o.red_y(at(i, j - 1), at(i, j), dbdx), epsilon = 1e-14);
        }
        assert_eq!(f.jr_y[[i, 0]], 0.0);
        assert_eq!(f.jb_y[[i, 3]], 0.0);
    }
}

#[test]
fn blue_fluxes_mirror_red_fluxes_under_reflection_and_swap() {
    let g = Grid::corridor(5, 3);
    let p = ModelParams::new(0.1, 0.01, 0.3, 0.3, 0.2);
    let s = random_state(&g, 9, 0.05, 0.45);
    let mut m = State::zeros(&g);
    for i in 0..5 {
        for j in 0..3 {
            m.r[[i, j]] = s.b[[4 - i, j]];
            m.b[[i, j]] = s.r[[4 - i, j]];
        }
    }
    let f = compute_fluxes(&s, &p, &g, Variant::Full).unwrap();
    let fm = compute_fluxes(&m, &p, &g, Variant::Full).unwrap();
    for i in 0..5 {
        for j in 0..3 {
            // Face east of i maps to the face east of 3 - i (mod 5).
            let k = (2 * 5 - 2 - i) % 5;
            assert_abs_diff_eq!(fm.jb_x[[k, j]], -f.jr_x[[i, j]], epsilon = 1e-15);
        }
    }
}

#[test]
fn stability_bound_examples() {
    let g = Grid::corridor(100, 10);
    let p = ModelParams::new(0.3, 0.0, 0.0, 0.0, 0.0);
    let dt = stability_dt(&p, &g, Variant::Full, 0.9).unwrap();
    assert_abs_diff_eq!(dt, 0.9 / (1.0 / 0.01 + 0.3 / 1e-4), epsilon = 1e-18);

    let thin = ModelParams::new(1e-9, 0.0, 0.0, 0.0, 0.0);
    let coarse = stability_dt(&thin, &Grid::corridor(50, 10), Variant::Full, 1.0).unwrap();
    let fine = stability_dt(&thin, &Grid::corridor(100, 10), Variant::Full, 1.0).unwrap();
    assert_abs_diff_eq!(fine / coarse, 0.5, epsilon = 1e-6);

    let scen2 = ModelParams::new(0.1, 0.001, 0.5, 0.4, 0.2);
    let dt2 = stability_dt(&scen2, &g, Variant::DodgeScaled, 0.9).unwrap();
    let rate = 1.2 / 0.01 + 0.1 * 1.05 / 1e-4 + 0.1 / 0.01 + 0.1 * (0.002 + 0.9) / 1e-4;
    assert_abs_diff_eq!(dt2, 0.9 / rate, epsilon = 1e-18);
}

#[test]
fn steps_beyond_the_bound_are_refused() {
    let g = Grid::corridor(20, 4);
    let p = ModelParams::symmetric(0.3, 0.1, 0.2);
    let mut st = ExplicitStepper::new(&p, &g, Variant::ReducedSym, 0.9).unwrap();
    let mut s = State::constant(&g, 0.4, 0.4);
    let before = s.clone();
    let err = st.step(&mut s, 2.0 * st.dt_max()).unwrap_err();
    assert!(matches!(err, Error::Cfl { .. }));
    assert_eq!(s, before);
    let cfg = SolverConfig { dt: Some(1.0), ..SolverConfig::explicit(Variant::ReducedSym) };
    assert!(matches!(run_pde(&s, &p, &g, &cfg, 1.0, None, |_, _| Ok(())), Err(Error::Cfl { .. })));
}

#[test]
fn reduced_variant_needs_equal_dodging() {
    let g = Grid::corridor(4, 4);
    let p = ModelParams::new(0.1, 0.001, 0.5, 0.4, 0.0);
    assert!(matches!(compute_fluxes(&State::zeros(&g), &p, &g, Variant::ReducedSym), Err(Error::Config(_))));
}

#[test]
fn explicit_steps_conserve_mass_and_stay_in_the_box() {
    let g = Grid::corridor(30, 6);
    for (p, variant) in [
        (ModelParams::symmetric(0.3, 0.1, 0.2), Variant::ReducedSym),
        (ModelParams::new(0.1, 0.001, 0.5, 0.4, 0.2), Variant::DodgeScaled),
        (ModelParams::new(0.1, 0.01, 0.5, 0.4, 0.2), Variant::Full),
    ] {
        let mut st = ExplicitStepper::new(&p, &g, variant, 0.9).unwrap();
        let mut s = random_state(&g, 5, 0.0, 0.5);
        for _ in 0..500 {
            let (mr, mb) = (s.mass_r(&g), s.mass_b(&g));
            st.step(&mut s, st.dt_max()).unwrap();
            assert!((s.mass_r(&g) - mr).abs() <= 1e-12 * mr);
            assert!((s.mass_b(&g) - mb).abs() <= 1e-12 * mb);
            assert!(s.check_box(1e-12).is_ok());
        }
    }
}

#[test]
fn packed_cells_stay_in_the_box_without_cohesion() {
    let g = Grid::corridor(10, 4);
    let p = ModelParams::new(0.1, 0.001, 0.5, 0.4, 0.2);
    let mut s = State::zeros(&g);
    for i in 0..10 {
        for j in 0..4 {
            let full = (i + j) % 3 == 0;
            s.r[[i, j]] = if full { 1.0 } else { 0.2 };
            s.b[[i, j]] = if full { 0.0 } else { 0.3 };
        }
    }
    let s0 = s.clone();
    for (p, variant) in [(ModelParams { alpha: 0.0, ..p }, Variant::DodgeScaled), (ModelParams::new(0.1, 0.001, 0.45, 0.45, 0.0), Variant::Full)] {
        let mut s = s0.clone();
        let mut st = ExplicitStepper::new(&p, &g, variant, 0.9).unwrap();
        for _ in 0..2000 {
            st.step(&mut s, st.dt_max()).unwrap();
            assert!(s.check_box(0.0).is_ok());
        }
    }
}

#[test]
fn mirrored_data_stays_mirrored() {
    let g = Grid::corridor(40, 6);
    let p = ModelParams::new(0.2, 0.05, 0.3, 0.3, 0.1);
    let base = random_state(&g, 11, 0.05, 0.45);
    let mut s = base.clone();
    for i in 0..40 {
        for j in 0..6 {
            s.b[[39 - i, j]] = base.r[[i, j]];
        }
    }
    let cfg = SolverConfig::explicit(Variant::Full);
    let mut checked = 0;
    run_pde(&s, &p, &g, &cfg, 0.2, Some(0.02), |st, _| {
        for i in 0..40 {
            for j in 0..6 {
                assert!((st.r[[i, j]] - st.b[[39 - i, j]]).abs() <= 1e-10);
            }
        }
        checked += 1;
        Ok(())
    })
    .unwrap();
    assert_eq!(checked, 11);
}

#[test]
fn run_hits_emission_times_exactly() {
    let g = Grid::corridor(20, 4);
    let p = ModelParams::symmetric(0.3, 0.1, 0.2);
    let s = make_initial(&InitialCondition::Sinusoidal { c_r: 0.4, c_b: 0.4, amplitude: 0.02 }, &g).unwrap();
    let mut times = vec![];
    let run = run_pde(&s, &p, &g, &SolverConfig::explicit(Variant::ReducedSym), 0.1, Some(0.03), |st, _| {
        times.push(st.t);
        Ok(())
    })
    .unwrap();
    assert_eq!(times.len(), 5);
    assert_eq!(times[0], 0.0);
    assert_abs_diff_eq!(times[2], 0.06, epsilon = 1e-15);
    assert_eq!(*times.last().unwrap(), 0.1);
    assert_eq!(run.state.t, 0.1);
}

#[test]
fn entropy_variables_examples() {
    let (u, v) = entropy_vars(0.25, 0.25, 0.0, 0.37);
    assert_eq!(u, v);
    assert_abs_diff_eq!(u, -1.039_720_770_839_917_9, epsilon = 1e-15);
    let (r, b) = primal_from_entropy(-0.3, -0.3, 0.0, 0.1).unwrap();
    assert_eq!(r, b);
}

#[test]
fn entropy_transform_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let h = 0.1;
    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let (r, b) = interior_sample(&mut rng);
        let x: f64 = rng.random();
        let (u, v) = entropy_vars(r, b, x, h);
        let (r2, b2) = primal_from_entropy(u, v, x, h).unwrap();
        assert!(r2 > 0.0 && b2 > 0.0 && r2 + b2 < 1.0);
        worst = worst.max((r - r2).abs()).max((b - b2).abs());
    }
    assert!(worst <= 1e-12, "worst round-trip error {worst:e}");
}

#[test]
fn state_level_transform_round_trips_and_clips() {
    let g = Grid::corridor(10, 4);
    let s = random_state(&g, 2, 0.01, 0.49);
    let e = primal_to_entropy(&s, &g, 0.1, 1e-10).unwrap();
    let back = entropy_to_primal(&e, &g, 0.1).unwrap();
    assert!(sup_diff(&s, &back) <= 1e-12);

    let mut edge = s.clone();
    edge.r[[3, 1]] = 0.0;
    let e = primal_to_entropy(&edge, &g, 0.1, 1e-10).unwrap();
    assert!(e.u[[3, 1]].is_finite());
    edge.r[[3, 1]] = -1e-6;
    assert!(matches!(primal_to_entropy(&edge, &g, 0.1, 1e-10), Err(Error::NotInterior { i: 3, j: 1, .. })));
}

#[test]
fn inverse_transform_lands_inside_for_extreme_inputs() {
    for &(u, v, x) in &[(50.0, -50.0, 0.9), (-700.0, 700.0, 0.1), (30.0, 30.0, 0.5), (-30.0, -30.0, 0.0)] {
        if let Some((r, b)) = primal_from_entropy(u, v, x, 0.01) {
            assert!(r > 0.0 && b > 0.0 && r + b < 1.0);
        }
    }
}

#[test]
fn hessian_inverse_matches_finite_differences() {
    let (r, b, x, h) = (0.3, 0.2, 0.4, 0.1);
    let j = hessian_inverse(r, b);
    let (u, v) = entropy_vars(r, b, x, h);
    let eps = 1e-6;
    let (rp, bp) = primal_from_entropy(u + eps, v, x, h).unwrap();
    let (rm, bm) = primal_from_entropy(u - eps, v, x, h).unwrap();
    assert_abs_diff_eq!(j[0][0], (rp - rm) / (2.0 * eps), epsilon = 1e-8);
    assert_abs_diff_eq!(j[1][0], (bp - bm) / (2.0 * eps), epsilon = 1e-8);
}

#[test]
fn mobility_examples() {
    let p = ModelParams::symmetric(0.3, 0.1, 0.2);
    let (g, h) = assemble_g_h(0.0, 0.0, &p);
    assert_eq!(g, Matrix4::zeros());
    assert!(h.iter().all(|&v| v == 0.0));
    let (_, h) = assemble_g_h(0.3, 0.3, &p);
    assert!(h.iter().all(|&v| v == 0.0));
    let m = assemble_m(0.0, 0.4, &p);
    for k in 0..4 {
        assert_eq!(m[(0, k)], 0.0);
        assert_eq!(m[(1, k)], 0.0);
        assert_eq!(m[(k, 0)], 0.0);
        assert_eq!(m[(k, 1)], 0.0);
    }
}

#[test]
fn mobility_matrices_over_the_admissible_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = ModelParams::new(0.1, 0.001, 0.5, 0.4, 0.0);
    let mut worst = f64::INFINITY;
    for _ in 0..10_000 {
        let (r, b) = interior_sample(&mut rng);
        let mm = MobilityMatrices::at(r, b, &p);
        worst = worst.min(min_symmetric_eigenvalue(&mm.g));
        assert_eq!(mm.m, mm.m.transpose());
        assert_eq!(mm.g, mm.g.transpose());
        for k in 0..4 {
            assert!(mm.m[(k, k)] >= 0.0);
        }
    }
    assert!(worst >= -1e-12, "smallest eigenvalue {worst:e}");
}

#[test]
fn implicit_step_without_regularization_keeps_constant_states() {
    let g = Grid::corridor(10, 4);
    let p = ModelParams::symmetric(0.3, 0.1, 0.2);
    let s = State::constant(&g, 0.35, 0.25);
    let cfg = SolverConfig { regularization: Some(0.0), fp_tol: 1e-12, ..SolverConfig::implicit(1e-2) };
    let (out, rep) = step_implicit_entropy(&s, &p, &g, &cfg).unwrap();
    assert!(sup_diff(&s, &out) <= cfg.fp_tol, "{rep:?}");
    assert_abs_diff_eq!(out.t, 1e-2, epsilon = 1e-18);
}

fn smooth_state(g: &Grid) -> State {
    make_initial(&InitialCondition::Sinusoidal { c_r: 0.4, c_b: 0.3, amplitude: 0.05 }, g).unwrap()
}

#[test]
fn implicit_and_explicit_steps_agree_to_second_order() {
    let g = Grid::corridor(20, 4);
    let p = ModelParams::symmetric(0.3, 0.1, 0.2);
    let s = smooth_state(&g);
    let diffs: Vec<f64> = (0..4)
        .map(|k| {
            let tau = 2e-3 / f64::powi(2.0, k);
            let imp = SolverConfig { fp_tol: 1e-15, ..SolverConfig::implicit(tau) };
            let (a, _) = step_implicit_entropy(&s, &p, &g, &imp).unwrap();
            let exp = SolverConfig { dt: Some(tau), ..SolverConfig::explicit(Variant::ReducedSym) };
            let b = step_explicit(&s, &p, &g, &exp).unwrap();
            sup_diff(&a, &b)
        })
        .collect();
    for w in diffs.windows(2) {
        assert!(w[0] / w[1] >= 3.5, "{diffs:?}");
    }
}

#[test]
fn implicit_steps_stay_inside_and_drift_mass_only_through_regularization() {
    let g = Grid::corridor(20, 4);
    let p = ModelParams::symmetric(0.3, 0.1, 0.2);
    let mut s = smooth_state(&g);
    let tau = 5e-3;
    let cfg = SolverConfig { fp_tol: 1e-13, ..SolverConfig::implicit(tau) };
    let da = g.cell_area();
    for _ in 0..10 {
        let (next, _) = step_implicit_entropy(&s, &p, &g, &cfg).unwrap();
        assert!(next.r.iter().zip(&next.b).all(|(&r, &b)| r > 0.0 && b > 0.0 && r + b < 1.0));
        let e = primal_to_entropy(&next, &g, p.h, 0.0).unwrap();
        let (l1u, l1v) = (e.u.iter().map(|x| x.abs()).sum::<f64>() * da, e.v.iter().map(|x| x.abs()).sum::<f64>() * da);
        let (dr, db) = ((next.mass_r(&g) - s.mass_r(&g)).abs(), (next.mass_b(&g) - s.mass_b(&g)).abs());
        assert!(dr <= tau * tau * l1u * (1.0 + 1e-6) + 1e-14, "{dr:e} vs {:e}", tau * tau * l1u);
        assert!(db <= tau * tau * l1v * (1.0 + 1e-6) + 1e-14, "{db:e} vs {:e}", tau * tau * l1v);
        s = next;
    }
}

#[test]
fn implicit_scheme_rejects_other_variants() {
    let g = Grid::corridor(6, 3);
    let p = ModelParams::new(0.1, 0.001, 0.5, 0.4, 0.2);
    let s = State::constant(&g, 0.3, 0.3);
    assert!(step_implicit_entropy(&s, &p, &g, &SolverConfig::implicit(1e-3)).is_err());
}

#[test]
fn implicit_run_through_the_driver() {
    let g = Grid::corridor(10, 4);
    let p = ModelParams::symmetric(0.3, 0.1, 0.2);
    let s = smooth_state(&g);
    let run = run_pde(&s, &p, &g, &SolverConfig::implicit(1e-2), 0.05, None, |_, _| Ok(())).unwrap();
    assert_eq!(run.steps, 5);
    assert!(run.iterations >= 5);
    assert_abs_diff_eq!(run.state.t, 0.05, epsilon = 1e-15);
}

#[test]
fn lane_parameters_run_stably_at_the_bound_for_many_steps() {
    let g = Grid::corridor(100, 10);
    let p = ModelParams::new(0.1, 0.001, 0.5, 0.4, 0.2);
    let mut s = make_initial(&InitialCondition::Sinusoidal { c_r: 0.4, c_b: 0.4, amplitude: 0.02 }, &g).unwrap();
    let mut st = ExplicitStepper::new(&p, &g, Variant::DodgeScaled, 0.9).unwrap();
    for _ in 0..100_000 {
        st.step(&mut s, st.dt_max()).unwrap();
    }
    assert!(s.r.iter().chain(&s.b).all(|v| v.is_finite()));
    assert!(s.check_box(1e-12).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn explicit_step_is_conservative_for_any_admissible_state(
        seed in any::<u64>(),
        gamma0 in 0.0..0.2f64,
        gamma1 in 0.0..1.0f64,
        gamma2 in 0.0..1.0f64,
        alpha in 0.0..0.5f64,
    ) {
        let g = Grid::corridor(12, 5);
        let p = ModelParams::new(0.1, gamma0, gamma1, gamma2, alpha);
        let mut s = random_state(&g, seed, 0.0, 0.5);
        let (mr, mb) = (s.mass_r(&g), s.mass_b(&g));
        let mut st = ExplicitStepper::new(&p, &g, Variant::Full, 0.9).unwrap();
        for _ in 0..20 {
            st.step(&mut s, st.dt_max()).unwrap();
        }
        prop_assert!((s.mass_r(&g) - mr).abs() <= 1e-12 * mr.max(1e-3));
        prop_assert!((s.mass_b(&g) - mb).abs() <= 1e-12 * mb.max(1e-3));
        prop_assert!(s.check_box(1e-12).is_ok());
    }

    #[test]
    fn inverse_transform_always_admissible(u in -40.0..40.0f64, v in -40.0..40.0f64, x in 0.0..1.0f64) {
        if let Some((r, b)) = primal_from_entropy(u, v, x, 0.1) {
            prop_assert!(r > 0.0 && b > 0.0 && r + b < 1.0);
        }
    }
}

use std::f64::consts::PI;

use nsforce::forcing::*;
use nsforce::lp::{besov_norm, BesovIndex, DyadicPartition};
use nsforce::solver::*;
use nsforce::{random, spectral, Grid, SpectralField};

const L: f64 = 4.0 * PI;

fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm()
}

fn cfg(dt: f64, horizon: f64) -> SolverConfig {
    SolverConfig { dt, horizon, sample_stride: 1, ..Default::default() }
}

fn highdim_segment(grid: &Grid, eta: f64, t0: f64, t_star: f64) -> ForcingSegment {
    let b = make_bump_with(grid, BumpStyle::Positive, 1.0).unwrap();
    let spec = HighDimSpec {
        carrier: Carrier::Beta(8.0),
        eta,
        t0,
        t_star,
        h: 0.25,
        r: 4.0,
        sigma: 2.0,
        strict_delta: false,
    };
    forcing_highdim(&b, &spec).unwrap()
}

fn small_grid() -> Grid {
    Grid::with_shape(3, &[64, 16, 16], L).unwrap()
}

#[test]
fn config_validation() {
    assert!(SolverConfig::default().validate().is_ok());
    assert!(SolverConfig { dt: 0.0, ..Default::default() }.validate().is_err());
    assert!(SolverConfig { picard_tol: 0.1, ..Default::default() }.validate().is_err());
}

#[test]
fn unforced_duhamel_is_heat_flow() {
    let g = Grid::new(2, 32, L).unwrap();
    let a = random::solenoidal(&g, 4.0, &mut random::rng(3));
    let traj = duhamel(&ForcingSchedule::empty(), &a, 0.0, 1.0, &cfg(0.1, 1.0)).unwrap();
    for (t, u) in traj.iter() {
        let exact = spectral::heat_propagate(&a, t).unwrap();
        assert!(rel(u, &exact) < 1e-13, "t = {t}");
    }
}

#[test]
fn constant_forcing_matches_closed_form() {
    let g = small_grid();
    let seg = highdim_segment(&g, 0.05, 0.0, 4.0);
    let gfield = seg.separable().unwrap().0.clone();
    let sched = schedule_forcing(vec![seg]).unwrap();
    // χ ≡ 1 on [h, T_* − h] = [0.25, 3.75]
    let zero = SpectralField::zeros(&g, 3);
    let traj = duhamel(&sched, &zero, 0.5, 2.5, &cfg(0.05, 2.5)).unwrap();
    let (t, u) = traj.last().unwrap();
    let xi2 = g.xi2().to_vec();
    let exact = gfield.map_symbol(|i| if xi2[i] > 0.0 { (1.0 - (-xi2[i] * (t - 0.5)).exp()) / xi2[i] } else { 0.0 });
    assert!(rel(u, &exact) < 1e-8, "{:e}", rel(u, &exact));
}

#[test]
fn duhamel_is_second_order() {
    let g = small_grid();
    let sched = schedule_forcing(vec![highdim_segment(&g, 0.05, 0.0, 1.0)]).unwrap();
    let zero = SpectralField::zeros(&g, 3);
    let run = |dt: f64| duhamel(&sched, &zero, 0.0, 0.5, &cfg(dt, 0.5)).unwrap().last().unwrap().1.clone();
    let reference = run(0.5 / 1024.0);
    let e1 = rel(&run(0.5 / 32.0), &reference);
    let e2 = rel(&run(0.5 / 64.0), &reference);
    let order = e1 / e2;
    assert!(order > 3.0 && order < 5.0, "error ratio {order} ({e1:e}, {e2:e})");
}

#[test]
fn zero_first_iterate_gives_zero() {
    let g = small_grid();
    let zero = SpectralField::zeros(&g, 3);
    let sched = ForcingSchedule::empty();
    let c = cfg(0.1, 1.0);
    let mut u1 = DuhamelStream::new(&sched, &zero, 0.0, 0.1);
    let u2 = second_iteration(&mut u1, 0.0, 1.0, &c).unwrap();
    assert!(u2.samples().iter().all(|f| f.l2_norm() == 0.0));

    let mut s1 = DuhamelStream::new(&sched, &zero, 0.0, 0.1);
    let mut s2 = TrajectoryStream::new(&u2).unwrap();
    let norm = WorkingNorm::HighDim { r: 4.0, sigma: 2.0, rho: 3.0 };
    let (rem, rep) = picard_remainder(&mut s1, &mut s2, 0.0, 1.0, norm, &c).unwrap();
    assert!(rep.converged);
    assert_eq!(rep.iterations, 1);
    assert!(rem.samples().iter().all(|f| f.l2_norm() == 0.0));

    let (u, _) = solve_mild(&zero, &sched, 0.0, norm, &c).unwrap();
    assert!(u.samples().iter().all(|f| f.l2_norm() == 0.0));
}

#[test]
fn taylor_green_is_exact() {
    let g = Grid::new(2, 32, L).unwrap();
    let amp = 0.7;
    let tg = |t: f64| {
        SpectralField::from_fn(&g, 2, |x| {
            let e = amp * (-2.0 * t).exp();
            vec![e * x[0].sin() * x[1].cos(), -e * x[0].cos() * x[1].sin()]
        })
        .unwrap()
    };
    let (traj, rep) = solve_timestepper_report(&tg(0.0), &ForcingSchedule::empty(), 0.0, &cfg(0.05, 1.0)).unwrap();
    let (t, u) = traj.last().unwrap();
    assert!(rel(u, &tg(t)) < 1e-8, "{:e}", rel(u, &tg(t)));
    assert!(rep.max_divergence < 1e-9);
    // trapezoid budget of the dissipation, O(dt²)
    assert!(rep.energy_residual < 1e-2, "{}", rep.energy_residual);
}

#[test]
fn unforced_flow_dissipates() {
    let g = Grid::new(2, 32, L).unwrap();
    let part = DyadicPartition::for_grid(&g);
    let idx = BesovIndex::new(0.0, 2.0, 2.0).unwrap();
    for seed in 0..10 {
        let a = random::solenoidal(&g, 4.0, &mut random::rng(seed)).scaled(0.05);
        let traj = solve_timestepper(&a, &ForcingSchedule::empty(), 0.0, &cfg(0.05, 1.0)).unwrap();
        let norms: Vec<f64> = traj.samples().iter().map(|u| besov_norm(u, &part, idx).unwrap().value).collect();
        assert!(norms.windows(2).all(|w| w[1] < w[0]), "seed {seed}");
    }
}

#[test]
fn timestepper_is_second_order() {
    let g = Grid::new(2, 32, L).unwrap();
    let a = random::solenoidal(&g, 4.0, &mut random::rng(11));
    let a = a.scaled(1.0 / a.max_abs());
    let sched = ForcingSchedule::empty();
    let run = |dt: f64| solve_timestepper(&a, &sched, 0.0, &cfg(dt, 0.5)).unwrap().last().unwrap().1.clone();
    let reference = run(0.5 / 1024.0);
    let e1 = rel(&run(0.5 / 16.0), &reference);
    let e2 = rel(&run(0.5 / 32.0), &reference);
    let order = e1 / e2;
    assert!(order > 3.0 && order < 5.0, "error ratio {order} ({e1:e}, {e2:e})");
}

#[test]
fn mild_and_timestepper_agree_small() {
    let g = small_grid();
    let sched = schedule_forcing(vec![highdim_segment(&g, 0.05, 0.0, 1.5)]).unwrap();
    let a = random::solenoidal(&g, 1.5, &mut random::rng(5)).scaled(0.02);
    let c = SolverConfig { dt: 0.02, horizon: 2.0, sample_stride: 10, ..Default::default() };
    let norm = WorkingNorm::HighDim { r: 4.0, sigma: 2.0, rho: 3.0 };
    let (mild, reps) = solve_mild(&a, &sched, 0.0, norm, &c).unwrap();
    let step = solve_timestepper(&a, &sched, 0.0, &c).unwrap();
    assert!(reps.iter().all(|r| r.converged));
    let e = terminal_relative_error(&mild, &step).unwrap();
    assert!(e < 1e-4, "{e:e}");
    assert!(max_relative_error(&mild, &step).unwrap() < 1e-4);
}

#[test]
fn restart_does_not_change_solution() {
    let g = small_grid();
    let s1 = highdim_segment(&g, 0.05, 0.0, 1.0);
    let s2 = highdim_segment(&g, 0.025, 1.0, 1.0);
    let both = schedule_forcing(vec![s1.clone(), s2.clone()]).unwrap();
    let zero = SpectralField::zeros(&g, 3);
    let c = SolverConfig { dt: 0.02, horizon: 2.0, sample_stride: 5, ..Default::default() };
    let norm = WorkingNorm::HighDim { r: 4.0, sigma: 2.0, rho: 3.0 };
    let (mild, _) = solve_mild(&zero, &both, 0.0, norm, &c).unwrap();
    assert_eq!(restart_times(&both, 0.0, 2.0), vec![0.0, 1.0, 2.0]);
    let step = solve_timestepper(&zero, &both, 0.0, &c).unwrap();
    assert!(max_relative_error(&mild, &step).unwrap() < 1e-4);
    // the sample at the junction is the datum of the second window
    let k = mild.times().iter().position(|&t| (t - 1.0).abs() < 1e-12).unwrap();
    assert!(mild.times()[k + 1] > 1.0);
}

#[test]
fn lacunary_nonosc_round_trip() {
    let g = Grid::with_shape(3, &[128, 16, 16], L).unwrap();
    let b = make_bump_with(&g, BumpStyle::Positive, 1.0).unwrap();
    let spec = NonoscSpec {
        variant: NonoscVariant::Lacunary,
        eps: 0.8,
        eta: 0.05,
        p: 3.0,
        t0: 0.0,
        horizon: 2.0,
        k0: 2,
    };
    let seg = forcing_nonosc(&b, &spec).unwrap();
    let sched = schedule_forcing(vec![seg.clone()]).unwrap();
    let zero = SpectralField::zeros(&g, 3);
    let traj = duhamel(&sched, &zero, 0.0, 1.8, &SolverConfig { dt: 1e-3, horizon: 1.8, sample_stride: 600, ..Default::default() })
        .unwrap();
    for (t, u) in traj.iter().skip(1) {
        let exact = seg.closed_form_u1(t).unwrap().unwrap();
        assert!(rel(u, &exact) < 1e-6, "t = {t}: {:e}", rel(u, &exact));
    }
    let mut cf = ClosedFormStream::new(&seg, &zero, 0.0).unwrap();
    assert!(rel(&cf.value_at(1.2).unwrap(), &seg.closed_form_u1(1.2).unwrap().unwrap()) < 1e-15);
}

#[test]
fn trajectory_stream_interpolates() {
    let g = Grid::new(2, 16, L).unwrap();
    let a = random::solenoidal(&g, 3.0, &mut random::rng(2));
    let mut tr = nsforce::Trajectory::new(&g);
    tr.push(0.0, a.clone()).unwrap();
    tr.push(1.0, a.scaled(3.0)).unwrap();
    let mut s = TrajectoryStream::new(&tr).unwrap();
    assert!(rel(&s.value_at(0.25).unwrap(), &a.scaled(1.5)) < 1e-15);
    assert!(s.value_at(0.1).is_err());
    assert!(s.value_at(2.0).is_err());
}

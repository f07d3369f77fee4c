use std::f64::consts::PI;

use nsforce::forcing::*;
use nsforce::lp::{besov_norm, low_block_sup, BesovIndex, DyadicPartition};
use nsforce::{spectral, Grid, SpectralField};

const L: f64 = 4.0 * PI;

fn grid3(n: usize) -> Grid {
    Grid::new(3, n, L).unwrap()
}

fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm()
}

#[test]
fn bump_support_and_positivity() {
    let g = grid3(32);
    let b = make_bump(&g).unwrap();
    assert!(b.field.coefficient(0, [0, 0, 0]).re > 0.0);
    // |ξ| = 1.5 sits at k = (3, 0, 0) when L = 4π.
    assert_eq!(b.field.coefficient(0, [3, 0, 0]).norm(), 0.0);
    assert!(b.hat(1.5) == 0.0 && b.hat(0.99) > 0.0);
    for i in 0..g.len() {
        let c = b.field.component(0)[i];
        assert!(c.im == 0.0);
        if g.xi2()[i] < 1.0 {
            assert!(c.re > 0.0);
        }
    }
    let phys = &b.field.to_physical()[0];
    let (imax, _) = phys.iter().enumerate().fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    assert_eq!(imax, 0);
    // continuum normalization ψ(0) = 1, up to the periodic sum over images
    assert!((phys[0] - 1.0).abs() < 0.1, "ψ(0) = {}", phys[0]);
}

#[test]
fn coarse_grid_rejected() {
    let g = Grid::new(3, 16, 2.0 * PI).unwrap();
    assert!(make_bump(&g).is_err());
}

#[test]
fn psi_is_solenoidal() {
    let g = grid3(32);
    let b = make_bump(&g).unwrap();
    let psi = make_psi(&b).unwrap();
    assert_eq!(psi.component(0).iter().map(|c| c.norm()).sum::<f64>(), 0.0);
    assert!(spectral::divergence(&psi).unwrap().max_abs() < 1e-12);
    let m = spectral::modulate(&spectral::resample(&psi, &grid3(64)).unwrap(), 8.0, false).unwrap();
    assert!(spectral::divergence(&m).unwrap().max_abs() < 1e-10);
    assert!(make_psi(&make_bump_with(&Grid::new(2, 32, L).unwrap(), BumpStyle::Positive, 1.0).unwrap()).is_err());
}

#[test]
fn phi_matches_quadratic_identity() {
    // u = ηΨcos(βx₁) carries frequencies up to β+1; the product reaches 2β+2 = 18,
    // so x₁ is padded to 128 points to resolve it without truncation.
    let g = Grid::with_shape(3, &[128, 64, 64], L).unwrap();
    let b = make_bump(&g).unwrap();
    let eta = 0.05;
    let beta = 8.0;
    let u = spectral::modulate(&make_psi(&b).unwrap(), beta, false).unwrap().scaled(eta);
    let lhs = spectral::tensor_divergence(&u, &u).unwrap();
    let phi = make_phi(&b).unwrap().scaled(eta * eta);
    let plus = phi.add(&spectral::modulate(&phi, 2.0 * beta, false).unwrap()).unwrap();
    let minus = phi.sub(&spectral::modulate(&phi, 2.0 * beta, false).unwrap()).unwrap();
    let r_plus = rel(&lhs, &plus);
    let r_minus = rel(&lhs, &minus);
    assert!(r_plus < 1e-8, "residual with 1 + cos: {r_plus:e}");
    assert!(r_minus > 0.5, "1 − cos unexpectedly fits: {r_minus:e}");
    assert_eq!(phi.component(0).iter().map(|c| c.norm()).sum::<f64>(), 0.0);
}

#[test]
fn phi_is_even_under_axis_swap() {
    let g = grid3(32);
    let phi = make_phi(&make_bump(&g).unwrap()).unwrap();
    let mut even = 0.0f64;
    let mut odd = 0.0f64;
    for i in 0..g.len() {
        let [a, b, c] = g.unflatten(i);
        let j = g.flatten([a, c, b]);
        let p2 = phi.component(1)[i];
        let p3 = phi.component(2)[j];
        even = even.max((p2 - p3).norm());
        odd = odd.max((p2 + p3).norm());
    }
    assert!(even < 1e-14 * phi.max_coefficient().max(1.0), "even defect {even:e}");
    assert!(odd > 1e-6, "Φ vanishes");
}

fn highdim_spec(beta: f64) -> HighDimSpec {
    HighDimSpec {
        carrier: Carrier::Beta(beta),
        eta: 0.05,
        t0: 1.0,
        t_star: 4.0,
        h: 0.25,
        r: 4.0,
        sigma: 2.0,
        strict_delta: false,
    }
}

#[test]
fn highdim_window_and_divergence() {
    let g = grid3(64);
    let b = make_bump(&g).unwrap();
    let seg = forcing_highdim(&b, &highdim_spec(8.0)).unwrap();
    assert_eq!(seg.eval(1.0).unwrap().max_abs(), 0.0);
    assert_eq!(seg.eval(5.0).unwrap().max_abs(), 0.0);
    assert_eq!(seg.eval(7.0).unwrap().max_abs(), 0.0);
    let f = seg.eval(3.0).unwrap();
    assert!(f.max_abs() > 0.0);
    assert!(spectral::divergence(&f).unwrap().max_abs() < 1e-10 * 8.0 * 0.05);
    // δ = 8^{−1/4} ≈ 0.59 is far above η²: flagged, and rejected under the strict gate
    assert_eq!(seg.certificates["delta_regime_ok"], 0.0);
    let mut strict = highdim_spec(8.0);
    strict.strict_delta = true;
    assert!(forcing_highdim(&b, &strict).is_err());
    assert!(forcing_highdim(&b, &highdim_spec(12.0)).is_err());
}

#[test]
fn highdim_carrier_from_delta_is_snapped() {
    let g = grid3(64);
    let b = make_bump(&g).unwrap();
    let mut spec = highdim_spec(0.0);
    spec.carrier = Carrier::Delta(8f64.powf(-0.25) * 1.002);
    let seg = forcing_highdim(&b, &spec).unwrap();
    assert_eq!(seg.params["beta"], 8.0);
    assert!((seg.params["delta"] - 8f64.powf(-0.25)).abs() < 1e-12);
}

#[test]
fn highdim_critical_norm_scales_with_carrier() {
    let g = Grid::with_shape(3, &[128, 32, 32], L).unwrap();
    let b = make_bump(&g).unwrap();
    let part = DyadicPartition::for_grid(&g);
    let idx = BesovIndex::new(0.75 - 3.0, 4.0, 2.0).unwrap();
    let norm = |beta: f64| {
        let seg = forcing_highdim(&b, &highdim_spec(beta)).unwrap();
        besov_norm(seg.separable().unwrap().0, &part, idx).unwrap().value
    };
    let ratio = norm(16.0) / norm(8.0);
    let expect = 2f64.powf(0.75 - 1.0);
    assert!((ratio / expect - 1.0).abs() < 0.1, "ratio {ratio} vs {expect}");
}

#[test]
fn lacunary_single_term_is_highdim() {
    let g = grid3(64);
    let b = make_bump(&g).unwrap();
    let spec = LacunarySpec { eta: 0.05, t0: 0.0, t_star: 4.0, h: 0.25, k_terms: 1, k0: Some(2), sigma: 2.0 };
    let lac = forcing_lacunary(&b, &spec).unwrap();
    assert_eq!(lac.params["alpha_1"], 8.0);
    let mut hd = highdim_spec(8.0);
    hd.eta = 0.05 / 2f64.ln().sqrt();
    hd.t0 = 0.0;
    let hd = forcing_highdim(&b, &hd).unwrap();
    let d = rel(lac.separable().unwrap().0, hd.separable().unwrap().0);
    assert!(d < 1e-14, "{d:e}");
}

#[test]
fn lacunary_bookkeeping() {
    for k in 1..200 {
        let j1 = lacunary_j1(k);
        assert!((1.0..=2.0).contains(&j1), "J₁({k}) = {j1}");
    }
    let alpha = lacunary_frequencies(6, 2);
    assert!(interaction_frequencies(&alpha).iter().all(|&f| f > 4.0));
}

#[test]
fn lacunary_low_blocks_vanish() {
    let g = Grid::with_shape(3, &[256, 16, 16], L).unwrap();
    let b = make_bump_with(&g, BumpStyle::Positive, 1.0).unwrap();
    let spec = LacunarySpec { eta: 0.05, t0: 0.0, t_star: 4.0, h: 0.25, k_terms: 2, k0: None, sigma: 2.0 };
    let seg = forcing_lacunary(&b, &spec).unwrap();
    assert_eq!(seg.params["alpha_1"], 16.0);
    assert_eq!(seg.certificates["low_blocks_clean"], 1.0);
    let part = DyadicPartition::for_grid(&g);
    assert_eq!(low_block_sup(seg.separable().unwrap().0, &part, 2).unwrap(), 0.0);
}

#[test]
fn lacunary_norm_matches_series() {
    // α(k) = 2^{k+2}, k ≤ 8, reaches 1024.
    let g = Grid::with_shape(3, &[6912, 16, 16], L).unwrap();
    let b = make_bump_with(&g, BumpStyle::Positive, 1.0).unwrap();
    let part = DyadicPartition::for_grid(&g);
    let idx = BesovIndex::new(-2.0, 3.0, 4.0).unwrap();
    let spec = LacunarySpec { eta: 0.05, t0: 0.0, t_star: 4.0, h: 0.25, k_terms: 8, k0: Some(2), sigma: 4.0 };
    let seg = forcing_lacunary(&b, &spec).unwrap();
    let measured = seg.certificates["norm_bm2_n_sigma"];
    let scale = seg.certificates["series_scale"];
    // per-carrier constants: the same profile with a single carrier and unit weight
    let psi = make_psi(&b).unwrap();
    let single: Vec<f64> = lacunary_frequencies(8, 2)
        .iter()
        .map(|&a| {
            let f = spectral::laplacian(&spectral::modulate(&psi, a, false).unwrap());
            besov_norm(&f, &part, idx).unwrap().value
        })
        .collect();
    let lo = single.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = single.iter().copied().fold(0.0, f64::max);
    let ratio = measured / scale;
    assert!(ratio >= lo * (1.0 - 1e-9) && ratio <= hi * (1.0 + 1e-9), "{lo} ≤ {ratio} ≤ {hi}");
}

#[test]
fn twodim_support_and_norm_scaling() {
    let g = Grid::new(2, 256, L).unwrap();
    let b = make_bump_with(&g, BumpStyle::Plateau, 1.0).unwrap();
    let seg3 = forcing_2d(&b, &TwoDimSpec { n_scale: 3, m: 10.0, eta: 0.1, t0: 0.0 }).unwrap();
    let seg4 = forcing_2d(&b, &TwoDimSpec { n_scale: 4, m: 10.0, eta: 0.1, t0: 0.0 }).unwrap();
    assert_eq!(seg3.stop, 64.0);
    assert_eq!(seg3.eval(0.0).unwrap().max_abs(), 0.0);
    let f = seg3.separable().unwrap().0;
    for c in 0..2 {
        for (i, v) in f.component(c).iter().enumerate() {
            let rho = g.xi2()[i].sqrt();
            if rho < 8.0 - 1e-12 || rho > 12.0 + 1e-12 {
                assert_eq!(v.norm(), 0.0);
            }
        }
    }
    assert!(spectral::divergence(f).unwrap().max_abs() < 1e-10);
    let r3 = seg3.certificates["norm_bm1_11_over_m2_eta_rootn"];
    let r4 = seg4.certificates["norm_bm1_11_over_m2_eta_rootn"];
    assert!((r3 / r4 - 1.0).abs() < 0.05);
    assert!(forcing_2d(&b, &TwoDimSpec { n_scale: 2, m: 10.0, eta: 0.1, t0: 0.0 }).is_err());
    assert!(forcing_2d(&b, &TwoDimSpec { n_scale: 3, m: 8.0, eta: 0.1, t0: 0.0 }).is_err());
}

#[test]
fn chirp_forcing_decay_rate() {
    // Fourier radius 4 keeps Ψ at the 1e−3 level on the wrap plane of x₁.
    let g = Grid::with_shape(3, &[512, 32, 32], L).unwrap();
    let b = make_bump_with(&g, BumpStyle::Positive, 4.0).unwrap();
    let spec = NonoscSpec {
        variant: NonoscVariant::HighDim,
        eps: 0.5,
        eta: 0.05,
        p: 6.0,
        t0: 0.0,
        horizon: 3.75,
        k0: 0,
    };
    let seg = forcing_nonosc(&b, &spec).unwrap();
    let beta0 = seg.params["beta0"];
    assert_eq!(beta0, 4.0);
    assert!(seg.certificates["edge_ratio"] < 5e-3);
    let part = DyadicPartition::for_grid(&g);
    let idx = BesovIndex::new(0.5 - 3.0, 6.0, 2.0).unwrap();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    // β(t) = 2^j keeps the carrier at the same position inside its dyadic block,
    // so the per-octave sawtooth of the block weights cancels in the fit.
    for j in 3..=6 {
        let s = 2f64.powi(j) / beta0;
        let t = (s - 1.0) / beta0;
        let f = seg.eval(t).unwrap();
        assert!(spectral::divergence(&f).unwrap().max_abs() < 1e-10 * f.max_abs().max(1.0));
        xs.push(s.ln());
        ys.push(besov_norm(&f, &part, idx).unwrap().value.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() < 0.1, "decay exponent {slope}");
    assert!(forcing_nonosc(&b, &NonoscSpec { horizon: 5.0, ..spec.clone() }).is_err());
}

#[test]
fn i1_partial_sums_approach_one() {
    let eps = 0.3;
    let t = 1e4;
    let v = i1_partial_sum(eps, t);
    assert!(v <= 1.0 && v >= 1.0 - 2.0 / t.ln(), "I₁ = {v}");
    assert!(i1_partial_sum(eps, 100.0) < v);
}

#[test]
fn log_lacunary_u1_satisfies_heat_equation() {
    let g = Grid::with_shape(3, &[128, 16, 16], L).unwrap();
    let b = make_bump_with(&g, BumpStyle::Positive, 1.0).unwrap();
    let spec = NonoscSpec {
        variant: NonoscVariant::Lacunary,
        eps: 0.8,
        eta: 0.05,
        p: 3.0,
        t0: 0.0,
        horizon: 2.5,
        k0: 2,
    };
    let seg = forcing_nonosc(&b, &spec).unwrap();
    let t = 1.4;
    let dt = 1e-4;
    let up = seg.closed_form_u1(t + dt).unwrap().unwrap();
    let um = seg.closed_form_u1(t - dt).unwrap().unwrap();
    let u = seg.closed_form_u1(t).unwrap().unwrap();
    let mut resid = up.sub(&um).unwrap().scaled(0.5 / dt);
    resid.axpy(-1.0, &spectral::laplacian(&u)).unwrap();
    let f = seg.eval(t).unwrap();
    assert!(rel(&resid, &f) < 1e-6, "{:e}", rel(&resid, &f));
}

#[test]
fn chirp_u1_satisfies_heat_equation() {
    let g = Grid::with_shape(3, &[256, 32, 32], L).unwrap();
    let b = make_bump(&g).unwrap();
    let spec = NonoscSpec {
        variant: NonoscVariant::HighDim,
        eps: 0.5,
        eta: 0.05,
        p: 6.0,
        t0: 0.0,
        horizon: 1.5,
        k0: 0,
    };
    let seg = forcing_nonosc(&b, &spec).unwrap();
    let t = 0.7;
    let dt = 1e-5;
    let up = seg.closed_form_u1(t + dt).unwrap().unwrap();
    let um = seg.closed_form_u1(t - dt).unwrap().unwrap();
    let u = seg.closed_form_u1(t).unwrap().unwrap();
    let mut resid = up.sub(&um).unwrap().scaled(0.5 / dt);
    resid.axpy(-1.0, &spectral::laplacian(&u)).unwrap();
    assert!(rel(&resid, &seg.eval(t).unwrap()) < 1e-6);
    assert!(seg.closed_form_u1(0.0).unwrap().unwrap().max_abs() < 1e-15);
}

#[test]
fn schedule_rules() {
    let g = grid3(64);
    let b = make_bump(&g).unwrap();
    assert_eq!(schedule_forcing(vec![]).unwrap().eval(&g, 3.0).unwrap().max_abs(), 0.0);
    let mut s1 = highdim_spec(8.0);
    s1.t0 = 0.0;
    let mut s2 = highdim_spec(8.0);
    s2.t0 = 6.0;
    s2.eta = 0.025;
    let a = forcing_highdim(&b, &s1).unwrap();
    let c = forcing_highdim(&b, &s2).unwrap();
    let sched = schedule_forcing(vec![a.clone(), c.clone()]).unwrap();
    assert_eq!(sched.eval(&g, 5.0).unwrap().max_abs(), 0.0);
    assert!(sched.eval(&g, 8.0).unwrap().max_abs() > 0.0);
    let part = DyadicPartition::for_grid(&g);
    let w = sched.window_sup_norms(&part, BesovIndex::new(0.75 - 3.0, 4.0, 2.0).unwrap(), 8).unwrap();
    assert!((w[1] / w[0] - 0.5).abs() < 0.05);
    let mut s3 = highdim_spec(8.0);
    s3.t0 = 3.0;
    assert!(schedule_forcing(vec![a, forcing_highdim(&b, &s3).unwrap()]).is_err());
}

#[test]
fn window_is_smooth_glue() {
    let w = Window::new(1.0, 5.0, 0.25).unwrap();
    assert_eq!(w.value(1.0), 0.0);
    assert_eq!(w.value(1.125), 0.0);
    assert_eq!(w.value(1.25), 1.0);
    assert_eq!(w.value(3.0), 1.0);
    assert_eq!(w.value(5.0), 0.0);
    assert!(Window::new(0.0, 1.0, 1.5).is_err());
    let _ = L;
}

use std::f64::consts::PI;

use num_complex::Complex64;
use nsforce::random::{band_limited, rng, solenoidal};
use nsforce::spectral::*;
use nsforce::{snapshot, Grid, SpectralField};

fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm().max(1e-300)
}

#[test]
fn grid_lattice_arithmetic() {
    let g = Grid::new(2, 128, 2.0 * PI * 8.0).unwrap();
    assert!((g.nyquist() - 8.0).abs() < 1e-12);
    let g3 = Grid::new(3, 64, 2.0 * PI * 8.0).unwrap();
    assert_eq!(g3.len(), 64 * 64 * 64);
    assert!(Grid::new(2, 100, 1.0).is_err());
    assert!(Grid::new(4, 16, 1.0).is_err());
    assert!(Grid::new(1, 16, 1.0).is_err());
    assert!(Grid::new(2, 8, 1.0).is_err());
    assert!(Grid::new(3, 96, 1.0).is_ok());
}

#[test]
fn heat_single_mode() {
    let g = Grid::new(2, 16, 2.0 * PI).unwrap();
    let mut f = SpectralField::zeros(&g, 1);
    f.set_real_mode(0, [2, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
    let h = heat_propagate(&f, 0.25).unwrap();
    let c = h.coefficient(0, [2, 0, 0]).re;
    assert!((c - (-1.0f64).exp()).abs() < 1e-15);
    assert_eq!(heat_propagate(&f, 0.0).unwrap().components(), f.components());
    assert!(heat_propagate(&f, -1.0).is_err());
}

#[test]
fn heat_block_decay_window() {
    let g = Grid::new(2, 64, 4.0 * PI).unwrap();
    let mut r = rng(3);
    // band 2^{j-1} < |ξ| <= 2^{j+1} with j = 2
    let f = nsforce::random::band_limited_annulus(&g, 1, 2.0, 8.0, &mut r);
    let t = 0.01;
    let ratio = heat_propagate(&f, t).unwrap().l2_norm() / f.l2_norm();
    assert!(ratio >= (-64.0 * t).exp() && ratio <= (-4.0 * t).exp());
}

#[test]
fn leray_examples() {
    let g = Grid::new(3, 16, 2.0 * PI).unwrap();
    let mut r = rng(1);
    let q = band_limited(&g, 1, 5.0, &mut r);
    let grad = gradient(&q).unwrap();
    assert!(leray_project(&grad).unwrap().l2_norm() < 1e-12 * grad.l2_norm());
    let u = solenoidal(&g, 5.0, &mut r);
    assert!(rel(&leray_project(&u).unwrap(), &u) < 1e-12);
    let s = SpectralField::from_fn(&g, 3, |x| vec![x[1].sin(), 0.0, 0.0]).unwrap();
    assert!(rel(&leray_project(&s).unwrap(), &s) < 1e-13);
    let p = leray_project(&s).unwrap();
    assert_eq!(p.component(0)[0], Complex64::new(0.0, 0.0));
}

#[test]
fn inverse_laplacian_examples() {
    let g = Grid::new(2, 16, 2.0 * PI).unwrap();
    let mut f = SpectralField::zeros(&g, 1);
    f.set_real_mode(0, [2, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
    assert!((inverse_laplacian(&f).coefficient(0, [2, 0, 0]).re - 0.25).abs() < 1e-15);
    let z = SpectralField::zeros(&g, 1);
    assert_eq!(inverse_laplacian(&z).l2_norm(), 0.0);
    let mut r = rng(2);
    let mut h = band_limited(&g, 1, 6.0, &mut r);
    h.component_mut(0)[0] = Complex64::new(3.0, 0.0);
    let back = laplacian(&inverse_laplacian(&h)).scaled(-1.0);
    let mut mean_free = h.clone();
    mean_free.component_mut(0)[0] = Complex64::new(0.0, 0.0);
    assert!(rel(&back, &mean_free) < 1e-12);
    assert_eq!(back.component(0)[0], Complex64::new(0.0, 0.0));
}

#[test]
fn divergence_examples() {
    let g = Grid::new(2, 32, 2.0 * PI).unwrap();
    let mut r = rng(5);
    let psi = band_limited(&g, 1, 8.0, &mut r);
    let v = perp_gradient(&psi).unwrap();
    assert!(divergence(&v).unwrap().max_abs() < 1e-12 * v.max_abs());
    let c = SpectralField::from_fn(&g, 2, |_| vec![2.0, -1.0]).unwrap();
    assert!(divergence(&c).unwrap().max_abs() < 1e-14);
}

#[test]
fn nonlinear_zero_and_energy_flux() {
    let g = Grid::new(3, 32, 4.0 * PI).unwrap();
    let mut r = rng(7);
    let u = solenoidal(&g, 5.0, &mut r);
    let z = SpectralField::zeros(&g, 3);
    assert_eq!(nonlinear_term(&z, &u).unwrap().l2_norm(), 0.0);
    let n = nonlinear_term(&u, &u).unwrap();
    let flux = u.inner(&n).unwrap();
    let scale = u.l2_norm().powi(3);
    assert!(flux.abs() < 1e-10 * scale, "flux {flux} scale {scale}");
    let ns = nonlinear_self(&u).unwrap();
    assert!(rel(&ns, &n) < 1e-12);
    assert!(divergence(&n).unwrap().max_abs() < 1e-10 * n.max_abs());
}

#[test]
fn modulation_matches_physical_product() {
    let g = Grid::new(2, 64, 4.0 * PI).unwrap();
    let mut r = rng(9);
    let f = band_limited(&g, 1, 2.0, &mut r);
    let m = modulate(&f, 4.0, false).unwrap();
    let vals = f.to_physical();
    let prod: Vec<f64> = (0..g.len())
        .map(|i| vals[0][i] * (4.0 * g.x(0, g.unflatten(i)[0])).cos())
        .collect();
    let direct = SpectralField::from_physical(&g, &[prod]).unwrap();
    assert!(rel(&m, &direct) < 1e-12);
    let s = modulate(&f, 4.0, true).unwrap();
    let prod: Vec<f64> = (0..g.len())
        .map(|i| vals[0][i] * (4.0 * g.x(0, g.unflatten(i)[0])).sin())
        .collect();
    let direct = SpectralField::from_physical(&g, &[prod]).unwrap();
    assert!(rel(&s, &direct) < 1e-12);
    assert!(modulate(&f, 4.1, false).is_err());
    assert!(modulate(&f, 15.0, false).is_err());
}

#[test]
fn snapshot_round_trip_is_bit_exact() {
    let g = Grid::with_shape(3, &[32, 16, 16], 4.0 * PI).unwrap();
    let mut r = rng(11);
    let f = solenoidal(&g, 3.0, &mut r);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.nsfd");
    snapshot::write_snapshot(&path, &f).unwrap();
    let back = snapshot::read_snapshot(&path).unwrap();
    assert!(back.grid().same_as(f.grid()));
    for c in 0..3 {
        for (a, b) in back.component(c).iter().zip(f.component(c)) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }
    assert!(snapshot::from_bytes(&snapshot::to_bytes(&f)[..100]).is_err());
}

#[test]
fn resample_preserves_band_limited_fields() {
    let g = Grid::new(3, 16, 4.0 * PI).unwrap();
    let h = Grid::new(3, 24, 4.0 * PI).unwrap();
    let mut r = rng(4);
    let f = band_limited(&g, 3, 2.0, &mut r);
    let up = resample(&f, &h).unwrap();
    let down = resample(&up, &g).unwrap();
    assert!(rel(&down, &f) < 1e-15);
    assert!((up.l2_norm() - f.l2_norm()).abs() < 1e-12 * f.l2_norm());
}

use std::f64::consts::PI;

use num_complex::Complex64;
use nsforce::lp::*;
use nsforce::random::{band_limited, rng};
use nsforce::{Grid, SpectralField, Trajectory};

fn grid2() -> Grid {
    Grid::new(2, 64, 4.0 * PI).unwrap()
}

#[test]
fn partition_of_unity_on_lattice() {
    for g in [grid2(), Grid::new(3, 32, 4.0 * PI).unwrap(), Grid::new(2, 48, 2.0 * PI).unwrap()] {
        let part = DyadicPartition::for_grid(&g);
        let mut sum = vec![0.0; g.len()];
        for j in part.range() {
            for &(i, w) in part.entries(j).unwrap() {
                assert!(w > 0.0 && w <= 1.0);
                sum[i as usize] += w;
            }
        }
        let worst = sum
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 0)
            .map(|(_, s)| (s - 1.0f64).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "residual {worst}");
    }
}

#[test]
fn block_weights_support() {
    for j in -3..6 {
        let c = 2f64.powi(j);
        assert!(block_weight(j, c) > 0.0);
        assert_eq!(block_weight(j, 4.0 * c), 0.0);
        assert_eq!(block_weight(j, 0.5 * c), 0.0);
        assert_eq!(block_weight(j, 2.0 * c), 0.0);
    }
}

#[test]
fn partition_range_checks() {
    let g = grid2();
    let (lo, hi) = DyadicPartition::admissible(&g);
    assert_eq!(lo, -1);
    assert!(DyadicPartition::build(&g, lo - 1, hi).is_err());
    assert!(DyadicPartition::build(&g, lo, hi + 1).is_err());
    let p = DyadicPartition::build(&g, 0, 2).unwrap();
    assert!(p.entries(3).is_err());
}

#[test]
fn block_projection_examples() {
    let g = grid2();
    let part = DyadicPartition::for_grid(&g);
    // |k| = 2^j exactly: ξ = 4 is lattice index 8
    let mut f = SpectralField::zeros(&g, 1);
    f.set_real_mode(0, [8, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
    let b = part.block_project(&f, 2).unwrap();
    assert!((b.coefficient(0, [8, 0, 0]).re - block_weight(2, 4.0)).abs() < 1e-15);

    let mut r = rng(21);
    let h = band_limited(&g, 2, 20.0, &mut r);
    for j in part.range() {
        for jp in part.range() {
            if (j - jp).abs() >= 2 {
                let bb = part.block_project(&part.block_project(&h, j).unwrap(), jp).unwrap();
                assert_eq!(bb.l2_norm(), 0.0);
            }
        }
    }
    let mut sum = SpectralField::zeros(&g, 2);
    for j in part.range() {
        sum.axpy(1.0, &part.block_project(&h, j).unwrap()).unwrap();
    }
    assert!(sum.sub(&h).unwrap().l2_norm() < 1e-10 * h.l2_norm());
}

#[test]
fn besov_examples() {
    let g = Grid::new(2, 32, 2.0 * PI).unwrap();
    let part = DyadicPartition::for_grid(&g);
    let z = SpectralField::zeros(&g, 1);
    assert_eq!(besov_norm(&z, &part, BesovIndex::new(0.5, 2.0, 2.0).unwrap()).unwrap().value, 0.0);
    let f = SpectralField::from_fn(&g, 1, |x| vec![(4.0 * x[0]).cos()]).unwrap();
    let n = besov_norm(&f, &part, BesovIndex::new(0.0, f64::INFINITY, 1.0).unwrap()).unwrap();
    assert!((n.value - 1.0).abs() < 1e-10, "{}", n.value);
    let agg: f64 = n.block_profile.iter().map(|b| b.1).sum();
    assert!((agg - n.value).abs() < 1e-12);
}

#[test]
fn weak_lebesgue_examples() {
    let g = grid2();
    let mut vals = vec![0.0; g.len()];
    let mut count = 0;
    for (i, v) in vals.iter_mut().enumerate() {
        let ix = g.unflatten(i);
        if ix[0] < 20 && ix[1] < 11 {
            *v = 1.0;
            count += 1;
        }
    }
    let f = SpectralField::from_physical(&g, &[vals]).unwrap();
    let e = count as f64 * g.cell_volume();
    for p in [1.5, 2.0, 3.0] {
        let w = weak_lebesgue_norm(&f, p).unwrap();
        assert!((w - e.powf(1.0 / p)).abs() < 1e-10 * w, "{w}");
        let w3 = weak_lebesgue_norm(&f.scaled(-3.0), p).unwrap();
        assert!((w3 - 3.0 * w).abs() < 1e-12 * w3);
    }
    assert!(weak_lebesgue_norm(&f, 1.0).is_err());
    assert!(weak_lebesgue_norm(&f, f64::INFINITY).is_err());
    let mut r = rng(5);
    for _ in 0..100 {
        let h = band_limited(&g, 1, 6.0, &mut r);
        for p in [1.5, 3.0] {
            let weak = weak_lebesgue_norm(&h, p).unwrap();
            let strong = lp_quadrature(&h.to_physical()[0], p, g.cell_volume());
            assert!(weak <= strong * (1.0 + 1e-12));
        }
    }
}

#[test]
fn chemin_lerner_examples() {
    let g = grid2();
    let part = DyadicPartition::for_grid(&g);
    let mut r = rng(8);
    let f = band_limited(&g, 2, 10.0, &mut r);
    let idx = BesovIndex::new(0.5, 2.0, 2.0).unwrap();
    let mut traj = Trajectory::new(&g);
    for t in 0..4 {
        traj.push(t as f64, f.clone()).unwrap();
    }
    let cl = chemin_lerner_norm(&traj, &part, idx.with_time(f64::INFINITY).unwrap()).unwrap();
    let b = besov_norm(&f, &part, idx).unwrap();
    assert!((cl.value - b.value).abs() < 1e-12 * b.value);

    let mut traj = Trajectory::new(&g);
    for t in 0..6 {
        let t = t as f64 * 0.1;
        traj.push(t, nsforce::spectral::heat_propagate(&f, t).unwrap().add(&band_limited(&g, 2, 4.0, &mut r).scaled(t)).unwrap())
            .unwrap();
    }
    let cl = chemin_lerner_norm(&traj, &part, idx.with_time(f64::INFINITY).unwrap()).unwrap();
    for (_, s) in traj.iter() {
        assert!(besov_norm(s, &part, idx).unwrap().value <= cl.value + 1e-10);
    }
    assert!(chemin_lerner_norm(&Trajectory::new(&g), &part, idx.with_time(2.0).unwrap()).is_err());

    // X^N assembled from the two pieces
    let n = 3.0;
    let xn = xn_norm(&traj, &part, n).unwrap();
    let a = chemin_lerner_norm(&traj, &part, BesovIndex::new(1.0, 1.0, 1.0).unwrap().with_time(f64::INFINITY).unwrap())
        .unwrap()
        .value;
    let b = chemin_lerner_norm(&traj, &part, BesovIndex::new(1.0 + 2.0 / n, 1.0, 2.0).unwrap().with_time(n).unwrap())
        .unwrap()
        .value;
    assert!((xn - (a + n.sqrt() * b)).abs() < 1e-12 * xn);
}

#[test]
fn low_block_sup_examples() {
    let g = grid2();
    let part = DyadicPartition::for_grid(&g);
    assert_eq!(low_block_sup(&SpectralField::zeros(&g, 1), &part, 2).unwrap(), 0.0);
    let f = SpectralField::from_fn(&g, 1, |x| vec![x[0].cos()]).unwrap();
    assert!((low_block_sup(&f, &part, 2).unwrap() - 1.0).abs() < 1e-12);
    let mut r = rng(12);
    let idx = BesovIndex::new(-1.0, f64::INFINITY, f64::INFINITY).unwrap();
    for _ in 0..100 {
        let h = band_limited(&g, 2, 12.0, &mut r);
        assert!(low_block_sup(&h, &part, 2).unwrap() <= besov_norm(&h, &part, idx).unwrap().value + 1e-14);
    }
}

#[test]
fn paraproduct_examples() {
    let g = grid2();
    let part = DyadicPartition::for_grid(&g);
    let mut r = rng(14);
    let f = band_limited(&g, 1, 10.0, &mut r);
    let h = band_limited(&g, 1, 10.0, &mut r);
    let (t1, rem, t2) = paraproduct_decompose(&f, &h, &part).unwrap();
    let total = t1.add(&rem).unwrap().add(&t2).unwrap();
    let prod = nsforce::spectral::dealias(&nsforce::spectral::multiply(&f, &h).unwrap());
    assert!(total.sub(&prod).unwrap().l2_norm() < 1e-10 * prod.l2_norm());
    let (_, rem2, _) = paraproduct_decompose(&h, &f, &part).unwrap();
    assert!(rem2.sub(&rem).unwrap().l2_norm() < 1e-12 * rem.l2_norm());

    // low f against a single high mode g
    let low = band_limited(&g, 1, 0.75, &mut r);
    let high = SpectralField::from_fn(&g, 1, |x| vec![(8.0 * x[0]).cos()]).unwrap();
    let (t, rem, t2) = paraproduct_decompose(&low, &high, &part).unwrap();
    let prod = nsforce::spectral::dealias(&nsforce::spectral::multiply(&low, &high).unwrap());
    assert!(t.sub(&prod).unwrap().l2_norm() < 1e-12 * prod.l2_norm());
    assert!(rem.l2_norm() < 1e-12 * prod.l2_norm());
    assert!(t2.l2_norm() < 1e-12 * prod.l2_norm());
}

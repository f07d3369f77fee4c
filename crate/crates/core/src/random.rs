//! Seeded generators for band-limited random fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::SpectralField;
use crate::grid::Grid;
use crate::spectral;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real field with independent uniform coefficients on 0 < |ξ| ≤ radius.
pub fn band_limited(grid: &Grid, ncomp: usize, radius: f64, rng: &mut impl Rng) -> SpectralField {
    band_limited_annulus(grid, ncomp, 0.0, radius, rng)
}

/// Same as [`band_limited`] restricted to lo < |ξ| ≤ hi.
pub fn band_limited_annulus(grid: &Grid, ncomp: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> SpectralField {
    let xi2 = grid.xi2();
    let mut comps = vec![grid.zeros(); ncomp];
    for i in 0..grid.len() {
        let j = grid.neg_index(i);
        if j < i || xi2[i] == 0.0 || xi2[i] > hi * hi || xi2[i] <= lo * lo {
            continue;
        }
        for comp in comps.iter_mut() {
            let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if i == j {
                comp[i] = Complex64::new(v.re, 0.0);
            } else {
                comp[i] = v;
                comp[j] = v.conj();
            }
        }
    }
    SpectralField::from_components(grid, comps, true).expect("matching sizes")
}

/// Divergence-free band-limited vector field.
pub fn solenoidal(grid: &Grid, radius: f64, rng: &mut impl Rng) -> SpectralField {
    let f = band_limited(grid, grid.dim(), radius, rng);
    spectral::leray_project(&f).expect("vector field")
}

//! Ratio suites for the bilinear estimates.
//!
//! Each sample draws band-limited random inputs on the coarse grid, transfers
//! them unchanged to the refined grid, and evaluates LHS/RHS of the estimate on
//! both. Inputs are constant on I = [0, T], so the Duhamel term is exact per mode:
//! ∫₀^t e^{(t−τ)Δ}B dτ = (1 − e^{tΔ})(−Δ)^{−1}B.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::lp::{
    besov_norm, chemin_lerner_from_table, paraproduct_decompose, weak_lebesgue_norm, BesovIndex, DyadicPartition,
};
use crate::random;
use crate::spectral;

#[derive(Clone, Debug)]
pub struct BilinearSpec {
    pub samples: usize,
    pub seed: u64,
    /// Points per axis of the coarse 2D and 3D grids; the refined grids double them.
    pub coarse_2d: usize,
    pub coarse_3d: usize,
    pub length: f64,
    /// Length T of the time interval.
    pub interval: f64,
    pub time_samples: usize,
    /// Largest input frequency; products stay inside the coarse dealiasing box.
    pub max_radius: f64,
    /// N in the X^N estimates.
    pub n_scale: f64,
}

impl Default for BilinearSpec {
    fn default() -> Self {
        BilinearSpec {
            samples: 50,
            seed: 7,
            coarse_2d: 32,
            coarse_3d: 32,
            length: 2.0 * std::f64::consts::PI,
            interval: 1.0,
            time_samples: 9,
            max_radius: 5.0,
            n_scale: 3.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LemmaSuite {
    pub name: String,
    pub statement: String,
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    pub max_coarse: f64,
    pub max_fine: f64,
    /// max_fine / max_coarse − 1.
    pub drift: f64,
}

impl LemmaSuite {
    pub fn finite(&self) -> bool {
        self.max_coarse.is_finite() && self.max_fine.is_finite() && self.max_coarse > 0.0
    }

    pub fn stable(&self, tol: f64) -> bool {
        self.drift.abs() <= tol
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BilinearOutcome {
    pub suites: Vec<LemmaSuite>,
    /// Largest relative residual of T_f g + R(f,g) + T_g f against fg.
    pub paraproduct_residual: f64,
}

const NAMES: [(&str, &str); 7] = [
    ("paraproduct_low_high", "‖T_f g‖_{Ḃ^{1/2}_{2,2}} / ‖f‖_{Ḃ^{-1/2}_{4,2}}‖g‖_{Ḃ^{1}_{4,2}}"),
    ("paraproduct_remainder", "‖R(f,g)‖_{Ḃ^{1}_{2,1}} / ‖f‖_{Ḃ^{1/2}_{4,2}}‖g‖_{Ḃ^{1/2}_{4,2}}"),
    ("duhamel_besov_2d", "‖D‖_{L̃²Ḃ¹_{2,2}} / ‖u‖_{L̃⁴Ḃ^{1/2}_{2,2}}‖v‖_{L̃⁴Ḃ^{1/2}_{2,2}} (n = 2)"),
    ("duhamel_xn_sup", "‖D‖_{L̃^∞Ḃ¹_{1,1}} / N‖u‖_{L̃^NḂ^{1+2/N}_{1,2}}‖v‖_{L̃^NḂ^{1+2/N}_{1,2}}"),
    ("duhamel_xn_n", "‖D‖_{L̃^NḂ^{1+2/N}_{1,2}} / √N‖u‖_{L̃^NḂ^{1+2/N}_{1,2}}‖v‖_{L̃^NḂ^{1+2/N}_{1,2}}"),
    ("duhamel_weak_besov_3d", "‖D‖_{L̃^∞Ḃ^{-1/4}_{4,2}} / ‖u‖_{L^∞L^{3,∞}}‖v‖_{L̃³Ḃ^{5/12}_{4,2}} (n = 3)"),
    ("duhamel_weak_3d", "‖D‖_{L^∞L^{3,∞}} / ‖u‖_{L^∞L^{3,∞}}‖v‖_{L^∞L^{3,∞}} (n = 3)"),
];

struct Ctx {
    part: DyadicPartition,
    times: Vec<f64>,
    t: f64,
}

impl Ctx {
    fn new(grid: &Grid, t: f64, samples: usize) -> Self {
        let times = (0..samples).map(|i| t * i as f64 / (samples - 1) as f64).collect();
        Ctx { part: DyadicPartition::for_grid(grid), times, t }
    }

    fn besov(&self, f: &SpectralField, s: f64, p: f64, q: f64) -> Result<f64> {
        Ok(besov_norm(f, &self.part, BesovIndex::new(s, p, q)?)?.value)
    }

    /// Chemin–Lerner norm of a field held constant on [0, T].
    fn cl_const(&self, f: &SpectralField, s: f64, p: f64, q: f64, r: f64) -> Result<f64> {
        let row = self.part.block_lp(f, p)?;
        let idx = BesovIndex::new(s, p, q)?.with_time(r)?;
        Ok(chemin_lerner_from_table(&[0.0, self.t], &[row.clone(), row], &self.part, idx)?.value)
    }

    fn duhamel(&self, b: &SpectralField) -> Vec<SpectralField> {
        let xi2 = b.grid().xi2().to_vec();
        self.times
            .iter()
            .map(|&t| {
                b.map_symbol(|i| {
                    let l = xi2[i];
                    if l == 0.0 {
                        0.0
                    } else {
                        -(-l * t).exp_m1() / l
                    }
                })
            })
            .collect()
    }

    fn cl_traj(&self, traj: &[SpectralField], s: f64, p: f64, q: f64, r: f64) -> Result<f64> {
        let table = traj.iter().map(|f| self.part.block_lp(f, p)).collect::<Result<Vec<_>>>()?;
        let idx = BesovIndex::new(s, p, q)?.with_time(r)?;
        Ok(chemin_lerner_from_table(&self.times, &table, &self.part, idx)?.value)
    }
}

fn draw(grid: &Grid, ncomp: usize, max_radius: f64, rng: &mut impl Rng) -> SpectralField {
    let hi = rng.gen_range(0.4 * max_radius..=max_radius);
    let lo = rng.gen_range(0.0..0.5 * hi);
    random::band_limited_annulus(grid, ncomp, lo, hi, rng)
}

fn two_dim_ratios(
    ctx: &Ctx,
    f: &SpectralField,
    g: &SpectralField,
    u: &SpectralField,
    v: &SpectralField,
    n: f64,
) -> Result<([f64; 5], f64)> {
    let (tfg, rfg, tgf) = paraproduct_decompose(f, g, &ctx.part)?;
    let prod = spectral::multiply(f, g)?;
    let mut sum = tfg.add(&rfg)?;
    sum.axpy(1.0, &tgf)?;
    let resid = sum.sub(&prod)?.l2_norm() / prod.l2_norm();
    let t_ratio = ctx.besov(&tfg, 0.5, 2.0, 2.0)? / (ctx.besov(f, -0.5, 4.0, 2.0)? * ctx.besov(g, 1.0, 4.0, 2.0)?);
    let r_ratio = ctx.besov(&rfg, 1.0, 2.0, 1.0)? / (ctx.besov(f, 0.5, 4.0, 2.0)? * ctx.besov(g, 0.5, 4.0, 2.0)?);

    let d = ctx.duhamel(&spectral::nonlinear_term(u, v)?);
    let l23 = ctx.cl_traj(&d, 1.0, 2.0, 2.0, 2.0)?
        / (ctx.cl_const(u, 0.5, 2.0, 2.0, 4.0)? * ctx.cl_const(v, 0.5, 2.0, 2.0, 4.0)?);
    let xu = ctx.cl_const(u, 1.0 + 2.0 / n, 1.0, 2.0, n)?;
    let xv = ctx.cl_const(v, 1.0 + 2.0 / n, 1.0, 2.0, n)?;
    let l44a = ctx.cl_traj(&d, 1.0, 1.0, 1.0, f64::INFINITY)? / (n * xu * xv);
    let l44b = ctx.cl_traj(&d, 1.0 + 2.0 / n, 1.0, 2.0, n)? / (n.sqrt() * xu * xv);
    Ok(([t_ratio, r_ratio, l23, l44a, l44b], resid))
}

fn three_dim_ratios(ctx: &Ctx, u: &SpectralField, v: &SpectralField) -> Result<[f64; 2]> {
    let (r, sigma, rho) = (4.0, 2.0, 3.0);
    let s = 3.0 / r - 1.0;
    let d = ctx.duhamel(&spectral::nonlinear_term(u, v)?);
    let wu = weak_lebesgue_norm(u, 3.0)?;
    let wv = weak_lebesgue_norm(v, 3.0)?;
    let l35 = ctx.cl_traj(&d, s, r, sigma, f64::INFINITY)? / (wu * ctx.cl_const(v, s + 2.0 / rho, r, sigma, rho)?);
    let mut wd = 0.0f64;
    for f in &d {
        wd = wd.max(weak_lebesgue_norm(f, 3.0)?);
    }
    Ok([l35, wd / (wu * wv)])
}

pub fn bilinear_ratio_suite(spec: &BilinearSpec) -> Result<BilinearOutcome> {
    let l = spec.length;
    let g2 = [Grid::new(2, spec.coarse_2d, l)?, Grid::new(2, 2 * spec.coarse_2d, l)?];
    let g3 = [Grid::new(3, spec.coarse_3d, l)?, Grid::new(3, 2 * spec.coarse_3d, l)?];
    let c2 = [Ctx::new(&g2[0], spec.interval, spec.time_samples), Ctx::new(&g2[1], spec.interval, spec.time_samples)];
    let c3 = [Ctx::new(&g3[0], spec.interval, spec.time_samples), Ctx::new(&g3[1], spec.interval, spec.time_samples)];
    let mut ratios = vec![[Vec::new(), Vec::new()]; NAMES.len()];
    let mut resid = 0.0f64;
    let mut rng = random::rng(spec.seed);
    for _ in 0..spec.samples {
        let f = draw(&g2[0], 1, spec.max_radius, &mut rng);
        let g = draw(&g2[0], 1, spec.max_radius, &mut rng);
        let u = draw(&g2[0], 2, spec.max_radius, &mut rng);
        let v = draw(&g2[0], 2, spec.max_radius, &mut rng);
        let u3 = draw(&g3[0], 3, spec.max_radius, &mut rng);
        let v3 = draw(&g3[0], 3, spec.max_radius, &mut rng);
        for level in 0..2 {
            let tr = |x: &SpectralField, gr: &Grid| spectral::resample(x, gr);
            let (r2, res) = two_dim_ratios(
                &c2[level],
                &tr(&f, &g2[level])?,
                &tr(&g, &g2[level])?,
                &tr(&u, &g2[level])?,
                &tr(&v, &g2[level])?,
                spec.n_scale,
            )?;
            resid = resid.max(res);
            let r3 = three_dim_ratios(&c3[level], &tr(&u3, &g3[level])?, &tr(&v3, &g3[level])?)?;
            for (i, x) in r2.iter().chain(r3.iter()).enumerate() {
                ratios[i][level].push(*x);
            }
        }
    }
    let suites = NAMES
        .iter()
        .zip(ratios)
        .map(|((name, statement), [coarse, fine])| {
            let max_coarse = coarse.iter().copied().fold(0.0, f64::max);
            let max_fine = fine.iter().copied().fold(0.0, f64::max);
            LemmaSuite {
                name: name.to_string(),
                statement: statement.to_string(),
                coarse,
                fine,
                max_coarse,
                max_fine,
                drift: max_fine / max_coarse - 1.0,
            }
        })
        .collect();
    Ok(BilinearOutcome { suites, paraproduct_residual: resid })
}

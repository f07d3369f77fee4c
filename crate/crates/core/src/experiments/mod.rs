//! Named experiments built on the solvers, and their reports.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::forcing::{make_bump, make_phi, simpson, BumpProfile};
use crate::grid::Grid;
use crate::lp::{besov_norm, low_block_sup, phi0_hat, BesovIndex, DyadicPartition, NormSample};
use crate::spectral;

pub mod bilinear;
pub mod report;
pub mod setup;
pub mod runs;

pub use report::{export_report, import_report, read_table, NormRecord, Report, Table};
pub use runs::*;
pub use setup::{run_experiment, EXPERIMENTS};
pub use bilinear::{bilinear_ratio_suite, BilinearOutcome, BilinearSpec, LemmaSuite};

/// (−Δ)^{−1}ℙΦ for a bump.
pub fn phi_potential(bump: &BumpProfile) -> Result<SpectralField> {
    Ok(spectral::inverse_laplacian(&spectral::leray_project(&make_phi(bump)?)?))
}

/// ĉ_* = (1/5) sup_{j ≤ 2} 2^{−j}‖Δ_j(−Δ)^{−1}ℙΦ‖_{L^∞} for the default bump.
pub fn estimate_cstar(grid: &Grid) -> Result<f64> {
    cstar_for(&make_bump(grid)?)
}

pub fn cstar_for(bump: &BumpProfile) -> Result<f64> {
    let part = DyadicPartition::for_grid(bump.grid());
    Ok(low_block_sup(&phi_potential(bump)?, &part, 2)? / 5.0)
}

/// φ₀(|x|) = (2π)^{−3}∫φ̂₀(ξ)e^{ix·ξ}dξ on ℝ³, by radial quadrature.
pub fn phi0_radial(r: f64) -> f64 {
    let f = |rho: f64| {
        let k = if r == 0.0 { rho * rho } else { rho * (rho * r).sin() / r };
        phi0_hat(rho) * k
    };
    simpson(f, 0.5, 2.0, 2000) / (2.0 * PI * PI)
}

/// ‖φ₀‖_{L^q(ℝ³)}.
pub fn phi0_lq_norm(q: f64) -> f64 {
    let r_max = 80.0;
    let panels = 8000;
    let h = r_max / panels as f64;
    let vals: Vec<f64> = (0..=panels).map(|i| phi0_radial(i as f64 * h)).collect();
    if q.is_infinite() {
        return vals.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let g = |i: usize| 4.0 * PI * vals[i].abs().powf(q) * (i as f64 * h).powi(2);
    let mut s = g(0) + g(panels);
    for i in 1..panels {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i);
    }
    (s * h / 3.0).powf(1.0 / q)
}

/// Decay criterion for T_*.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TStar {
    /// First t with ‖e^{tΔ}(−Δ)^{−1}ℙΦ‖ below the bound.
    pub crossing: f64,
    /// crossing + h.
    pub t_star: f64,
    pub bound: f64,
    pub phi0_norm: f64,
    pub cstar: f64,
    /// (t, norm) pairs sampled while searching.
    pub curve: Vec<(f64, f64)>,
}

/// T_* − h = first t with ‖e^{tΔ}(−Δ)^{−1}ℙΦ‖_{Ḃ^{n/r−1}_{r,σ}} ≤ ĉ_*/(2‖φ₀‖_{L^{r'}}).
pub fn find_t_star(bump: &BumpProfile, r: f64, sigma: f64, h: f64, probe: f64, cap: f64) -> Result<Option<TStar>> {
    let grid = bump.grid();
    if grid.dim() != 3 {
        return Err(Error::InvalidArgument("the T_* criterion is implemented for n = 3".into()));
    }
    let part = DyadicPartition::for_grid(grid);
    let pot = phi_potential(bump)?;
    let cstar = low_block_sup(&pot, &part, 2)? / 5.0;
    let rp = r / (r - 1.0);
    let phi0_norm = phi0_lq_norm(rp);
    let bound = cstar / (2.0 * phi0_norm);
    let idx = BesovIndex::new(3.0 / r - 1.0, r, sigma)?;
    let norm_at = |t: f64| -> Result<f64> { Ok(besov_norm(&spectral::heat_propagate(&pot, t)?, &part, idx)?.value) };
    let mut curve = Vec::new();
    let mut lo = 0.0;
    let mut t = 0.0;
    loop {
        let v = norm_at(t)?;
        curve.push((t, v));
        if v <= bound {
            break;
        }
        lo = t;
        t += probe;
        if t > cap {
            return Ok(None);
        }
    }
    let mut hi = t;
    if hi > 0.0 {
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if norm_at(mid)? <= bound {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    Ok(Some(TStar { crossing: hi, t_star: hi + h, bound, phi0_norm, cstar, curve }))
}

/// Result of the cos-lemma slope fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CosLemmaFit {
    pub s: f64,
    pub p: f64,
    pub radii: Vec<f64>,
    pub norms: Vec<f64>,
    pub nonzero_blocks: Vec<usize>,
    pub slope: f64,
    pub profiles: Vec<NormSample>,
}

/// Least-squares slope of y against x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Slope of log‖W_R‖_{Ḃ^s_{p,1}} against log R with W_R = ψ cos(R x₁) for the default bump.
pub fn check_cos_lemma(grid: &Grid, s: f64, p: f64, radii: &[f64]) -> Result<CosLemmaFit> {
    let bump = make_bump(grid)?;
    let part = DyadicPartition::for_grid(grid);
    let idx = BesovIndex::new(s, p, 1.0)?;
    let mut norms = Vec::new();
    let mut counts = Vec::new();
    let mut profiles = Vec::new();
    for &r in radii {
        if r + bump.fourier_radius > grid.nyquist() {
            return Err(Error::Resolution { freq: r + bump.fourier_radius, bound: grid.nyquist() });
        }
        let w = spectral::modulate(&bump.field, r, false)?;
        let ns = besov_norm(&w, &part, idx)?;
        let peak = ns.block_profile.iter().fold(0.0f64, |m, b| m.max(b.1));
        counts.push(ns.block_profile.iter().filter(|b| b.1 > 1e-12 * peak).count());
        norms.push(ns.value);
        profiles.push(ns);
    }
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    Ok(CosLemmaFit { s, p, radii: radii.to_vec(), norms, nonzero_blocks: counts, slope: fit_slope(&lx, &ly), profiles })
}


/// Lower bound on the low blocks of u⁽²⁾ at t₀ + T_* for the high-dimensional forcing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SecondIterationCheck {
    pub eta: f64,
    pub beta: f64,
    pub h: f64,
    pub t_star: f64,
    pub cstar: f64,
    /// sup_{j≤2} 2^{−j}‖Δ_j u⁽²⁾(t₀+T_*)‖_{L^∞}.
    pub low_block_sup: f64,
    /// Same quantity with the source restricted to [t₀, t₀+h] ∪ [t₀+T_*−h, t₀+T_*].
    pub window_contribution: f64,
    pub low_block_ratio: f64,
    pub window_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct SecondIterationSpec {
    pub beta: f64,
    pub eta: f64,
    pub r: f64,
    pub sigma: f64,
    pub h: f64,
    /// Explicit T_*; `None` uses the decay criterion.
    pub t_star: Option<f64>,
    pub dt: f64,
}

pub fn second_iteration_check(grid: &Grid, spec: &SecondIterationSpec) -> Result<SecondIterationCheck> {
    use crate::forcing::{forcing_highdim, schedule_forcing, Carrier, HighDimSpec};
    use crate::solver::{second_iteration_masked, DuhamelStream, SolverConfig};

    let bump = make_bump(grid)?;
    let part = DyadicPartition::for_grid(grid);
    let cstar = cstar_for(&bump)?;
    let t_star = match spec.t_star {
        Some(t) => t,
        None => {
            find_t_star(&bump, spec.r, spec.sigma, spec.h, 0.5, 200.0)?
                .ok_or_else(|| Error::InvalidArgument("decay criterion for T_* not met".into()))?
                .t_star
        }
    };
    let t0 = 0.0;
    let seg = forcing_highdim(
        &bump,
        &HighDimSpec {
            carrier: Carrier::Beta(spec.beta),
            eta: spec.eta,
            t0,
            t_star,
            h: spec.h,
            r: spec.r,
            sigma: spec.sigma,
            strict_delta: false,
        },
    )?;
    let beta = seg.params["beta"];
    let sched = schedule_forcing(vec![seg])?;
    let zero = SpectralField::zeros(grid, grid.dim());
    let t1 = t0 + t_star;
    let config = SolverConfig { dt: spec.dt, horizon: t1, sample_stride: usize::MAX, ..Default::default() };
    let run = |mask: &dyn Fn(f64) -> bool| -> Result<f64> {
        let mut u1 = DuhamelStream::new(&sched, &zero, t0, spec.dt);
        let traj = second_iteration_masked(&mut u1, t0, t1, &config, mask)?;
        low_block_sup(traj.last().ok_or(Error::EmptyTrajectory)?.1, &part, 2)
    };
    let full = run(&|_| true)?;
    let h = spec.h;
    let windows = run(&|t| t < t0 + h || t > t1 - h)?;
    let scale = cstar * spec.eta * spec.eta;
    Ok(SecondIterationCheck {
        eta: spec.eta,
        beta,
        h,
        t_star,
        cstar,
        low_block_sup: full,
        window_contribution: windows,
        low_block_ratio: full / scale,
        window_ratio: windows / scale,
    })
}

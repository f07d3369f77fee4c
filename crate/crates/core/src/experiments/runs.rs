//! Solver-backed experiments: Picard gate, cross-oracle, stability, oscillation and
//! the non-oscillating forcings.

use serde::{Deserialize, Serialize};

use super::report::{NormRecord, Table};
use super::{cstar_for, find_t_star, fit_slope, phi_potential};
use crate::error::{Error, Result};
use crate::field::{SpectralField, Trajectory};
use crate::forcing::{
    forcing_2d, forcing_highdim, forcing_nonosc, i1_partial_sum, make_bump, make_bump_with, schedule_forcing,
    BumpProfile, BumpStyle, Carrier, ForcingSchedule, ForcingSegment, HighDimSpec, NonoscSpec, NonoscVariant,
    TwoDimSpec,
};
use crate::grid::Grid;
use crate::lp::{besov_norm, low_block_sup, BesovIndex, DyadicPartition, NormSample};
use crate::random;
use crate::solver::{
    second_iteration, solve_mild, solve_timestepper, solve_timestepper_report, max_relative_error,
    terminal_relative_error, DuhamelStream, IterationReport, SolverConfig, WorkingNorm,
};
use crate::spectral;

/// Bump used for two-dimensional runs: 𝟙_{|ξ|≤1} ≤ ψ̂ ≤ 𝟙_{|ξ|≤2}.
pub fn bump_2d(grid: &Grid) -> Result<BumpProfile> {
    make_bump_with(grid, BumpStyle::Plateau, 1.0)
}

fn default_bump(grid: &Grid) -> Result<BumpProfile> {
    if grid.dim() == 2 {
        bump_2d(grid)
    } else {
        make_bump(grid)
    }
}

fn random_datum(grid: &Grid, radius: f64, amplitude: f64, seed: u64) -> SpectralField {
    if amplitude == 0.0 {
        return SpectralField::zeros(grid, grid.dim());
    }
    let mut rng = random::rng(seed);
    let f = random::solenoidal(grid, radius, &mut rng);
    let m = f.to_physical().iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    f.scaled(amplitude / m)
}

fn max_ratio(reports: &[IterationReport]) -> f64 {
    reports.iter().flat_map(|r| r.contraction_ratios.iter().copied()).fold(0.0, f64::max)
}

fn max_iterations(reports: &[IterationReport]) -> usize {
    reports.iter().map(|r| r.iterations).max().unwrap_or(0)
}

fn resolve_t_star(bump: &BumpProfile, r: f64, sigma: f64, h: f64, given: Option<f64>) -> Result<f64> {
    match given {
        Some(t) => Ok(t),
        None => Ok(find_t_star(bump, r, sigma, h, 0.5, 200.0)?
            .ok_or_else(|| Error::InvalidArgument("decay criterion for T_* not met before t = 200".into()))?
            .t_star),
    }
}

// ---------------------------------------------------------------------------
// Picard gate

#[derive(Clone, Debug)]
pub struct PicardGateSpec {
    pub shape: Vec<usize>,
    pub length: f64,
    pub beta: f64,
    pub r: f64,
    pub sigma: f64,
    pub rho: f64,
    pub h: f64,
    pub t_star: Option<f64>,
    pub dt: f64,
    pub etas: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PicardRun {
    pub eta: f64,
    pub contraction_ratios: Vec<f64>,
    pub max_ratio: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub u1_norm: f64,
    pub u2_norm: f64,
    pub remainder_norm: f64,
    /// ‖ũ‖/‖u⁽²⁾‖ in the working norm.
    pub ratio: f64,
    /// max(‖u⁽¹⁾‖/η, √(‖u⁽²⁾‖/η²)).
    pub c0: f64,
    /// ‖ũ‖ ≤ 6C₀³η³.
    pub ledger_ok: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PicardGate {
    pub t_star: f64,
    pub runs: Vec<PicardRun>,
    /// Slope of log(‖ũ‖/‖u⁽²⁾‖) against log η.
    pub slope: f64,
}

pub fn picard_gate(spec: &PicardGateSpec) -> Result<PicardGate> {
    let grid = Grid::with_shape(3, &spec.shape, spec.length)?;
    let bump = make_bump(&grid)?;
    let t_star = resolve_t_star(&bump, spec.r, spec.sigma, spec.h, spec.t_star)?;
    let norm = WorkingNorm::HighDim { r: spec.r, sigma: spec.sigma, rho: spec.rho };
    let zero = SpectralField::zeros(&grid, 3);
    let mut runs = Vec::new();
    for &eta in &spec.etas {
        let seg = forcing_highdim(
            &bump,
            &HighDimSpec {
                carrier: Carrier::Beta(spec.beta),
                eta,
                t0: 0.0,
                t_star,
                h: spec.h,
                r: spec.r,
                sigma: spec.sigma,
                strict_delta: false,
            },
        )?;
        let sched = schedule_forcing(vec![seg])?;
        let config = SolverConfig { dt: spec.dt, horizon: t_star, track_norms: true, ..Default::default() };
        let (_, reports) = solve_mild(&zero, &sched, 0.0, norm, &config)?;
        let rep = &reports[0];
        let u1 = rep.norms["u1_total"];
        let u2 = rep.norms["u2_total"];
        let rem = rep.norms["remainder_total"];
        let c0 = (u1 / eta).max((u2 / (eta * eta)).sqrt());
        runs.push(PicardRun {
            eta,
            contraction_ratios: rep.contraction_ratios.clone(),
            max_ratio: max_ratio(&reports),
            iterations: rep.iterations,
            converged: rep.converged,
            final_residual: rep.final_residual,
            u1_norm: u1,
            u2_norm: u2,
            remainder_norm: rem,
            ratio: rem / u2,
            c0,
            ledger_ok: rem <= 6.0 * c0.powi(3) * eta.powi(3),
        });
    }
    let lx: Vec<f64> = runs.iter().map(|r| r.eta.ln()).collect();
    let ly: Vec<f64> = runs.iter().map(|r| r.ratio.ln()).collect();
    let slope = if runs.len() >= 2 { fit_slope(&lx, &ly) } else { f64::NAN };
    Ok(PicardGate { t_star, runs, slope })
}

// ---------------------------------------------------------------------------
// Cross-oracle

#[derive(Clone, Debug)]
pub struct CrossOracleSpec {
    pub dim: usize,
    pub points: usize,
    pub length: f64,
    pub horizon: f64,
    pub dt: f64,
    pub eta: f64,
    /// 3D: carrier and window length of the high-dimensional forcing.
    pub beta: f64,
    pub t_star: f64,
    /// 2D: N and M of f_N.
    pub n_scale: u32,
    pub m: f64,
    /// Peak amplitude of the random solenoidal datum.
    pub datum: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossOracle {
    pub terminal_error: f64,
    pub max_error: f64,
    pub max_contraction: f64,
    pub picard_iterations: usize,
    pub stepper_divergence: f64,
    pub mild_divergence: f64,
    pub energy_residual: f64,
    pub terminal_l2: f64,
}

pub fn cross_oracle(spec: &CrossOracleSpec) -> Result<CrossOracle> {
    let grid = Grid::new(spec.dim, spec.points, spec.length)?;
    let bump = default_bump(&grid)?;
    let (seg, norm) = if spec.dim == 3 {
        let seg = forcing_highdim(
            &bump,
            &HighDimSpec {
                carrier: Carrier::Beta(spec.beta),
                eta: spec.eta,
                t0: 0.0,
                t_star: spec.t_star,
                h: 0.25,
                r: 4.0,
                sigma: 2.0,
                strict_delta: false,
            },
        )?;
        (seg, WorkingNorm::HighDim { r: 4.0, sigma: 2.0, rho: 3.0 })
    } else {
        let seg = forcing_2d(&bump, &TwoDimSpec { n_scale: spec.n_scale, m: spec.m, eta: spec.eta, t0: 0.0 })?;
        (seg, WorkingNorm::TwoDim { n: spec.n_scale as f64 })
    };
    let sched = schedule_forcing(vec![seg])?;
    let a = random_datum(&grid, 2.0, spec.datum, spec.seed);
    let config = SolverConfig { dt: spec.dt, horizon: spec.horizon, ..Default::default() };
    let (mild, reports) = solve_mild(&a, &sched, 0.0, norm, &config)?;
    let (step, srep) = solve_timestepper_report(&a, &sched, 0.0, &config)?;
    let mut mild_div = 0.0f64;
    for (_, f) in mild.iter() {
        mild_div = mild_div.max(spectral::divergence(f)?.max_abs());
    }
    Ok(CrossOracle {
        terminal_error: terminal_relative_error(&mild, &step)?,
        max_error: max_relative_error(&mild, &step)?,
        max_contraction: max_ratio(&reports),
        picard_iterations: max_iterations(&reports),
        stepper_divergence: srep.max_divergence,
        mild_divergence: mild_div,
        energy_residual: srep.energy_residual,
        terminal_l2: step.last().map(|(_, f)| f.l2_norm()).unwrap_or(0.0),
    })
}

// ---------------------------------------------------------------------------
// Stability (p < n)

#[derive(Clone, Debug)]
pub struct StabilitySpec {
    pub points: usize,
    pub length: f64,
    pub p: f64,
    pub q: f64,
    pub beta: f64,
    /// One forcing window per amplitude, in order.
    pub etas: Vec<f64>,
    pub window: f64,
    pub gap: f64,
    pub h: f64,
    pub horizon: f64,
    pub dt: f64,
    pub sample_stride: usize,
    /// Peak amplitude of the random datum used for the force-free check.
    pub datum: f64,
    /// Heat times allowed for the single-window return.
    pub return_time: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityOutcome {
    pub index: (f64, f64, f64),
    pub forcing_norms: Vec<f64>,
    pub forcing_end: f64,
    /// (t, ‖u(t)‖_{Ḃ^{n/p−1}_{p,q}}) for the decaying schedule.
    pub series: Vec<(f64, f64)>,
    pub peak: f64,
    pub terminal: f64,
    pub ratio: f64,
    /// Norm non-increasing after the last window.
    pub envelope_monotone: bool,
    /// Force-free run from a random datum.
    pub free_series: Vec<(f64, f64)>,
    pub free_monotone: bool,
    /// Single window from rest.
    pub single_peak: f64,
    pub single_after: f64,
    pub single_ratio: f64,
    pub profiles: Vec<NormRecord>,
}

fn series_of(traj: &Trajectory, part: &DyadicPartition, idx: BesovIndex) -> Result<Vec<(f64, f64)>> {
    traj.iter().map(|(t, f)| Ok((t, besov_norm(f, part, idx)?.value))).collect()
}

fn non_increasing(s: &[(f64, f64)], from: f64) -> bool {
    let tail: Vec<f64> = s.iter().filter(|x| x.0 >= from).map(|x| x.1).collect();
    tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
}

pub fn run_stability(spec: &StabilitySpec) -> Result<StabilityOutcome> {
    let grid = Grid::new(3, spec.points, spec.length)?;
    let n = 3.0;
    if !(spec.p >= 1.0 && spec.p < n && spec.q.is_finite()) {
        return Err(Error::InvalidArgument(format!("stability needs 1 ≤ p < n and q < ∞, got p = {}, q = {}", spec.p, spec.q)));
    }
    let bump = make_bump(&grid)?;
    let part = DyadicPartition::for_grid(&grid);
    let idx = BesovIndex::new(n / spec.p - 1.0, spec.p, spec.q)?;
    let segment = |eta: f64, t0: f64| -> Result<ForcingSegment> {
        forcing_highdim(
            &bump,
            &HighDimSpec {
                carrier: Carrier::Beta(spec.beta),
                eta,
                t0,
                t_star: spec.window,
                h: spec.h,
                r: 4.0,
                sigma: 2.0,
                strict_delta: false,
            },
        )
    };
    let mut segs = Vec::new();
    let mut t0 = 0.0;
    for &eta in &spec.etas {
        segs.push(segment(eta, t0)?);
        t0 += spec.window + spec.gap;
    }
    let forcing_end = segs.last().map(|s| s.stop).unwrap_or(0.0);
    let sched = schedule_forcing(segs)?;
    let fidx = BesovIndex::new(n / spec.p - 3.0, spec.p, spec.q)?;
    let forcing_norms = sched.window_sup_norms(&part, fidx, 8)?;
    let zero = SpectralField::zeros(&grid, 3);
    let config = SolverConfig {
        dt: spec.dt,
        horizon: spec.horizon,
        sample_stride: spec.sample_stride,
        ..Default::default()
    };
    let traj = solve_timestepper(&zero, &sched, 0.0, &config)?;
    let series = series_of(&traj, &part, idx)?;
    let (ipk, peak) = series.iter().enumerate().fold((0, 0.0f64), |b, (i, x)| if x.1 > b.1 { (i, x.1) } else { b });
    let terminal = series.last().map(|x| x.1).unwrap_or(0.0);
    let mut profiles = vec![
        NormRecord::from_sample("peak", &besov_norm(&traj.samples()[ipk], &part, idx)?).at_time(series[ipk].0),
        NormRecord::from_sample("terminal", &besov_norm(traj.last().unwrap().1, &part, idx)?).at_time(spec.horizon),
    ];

    let a = random_datum(&grid, 3.0, spec.datum, spec.seed);
    let free_cfg = SolverConfig { horizon: spec.horizon.min(10.0), ..config.clone() };
    let free = solve_timestepper(&a, &ForcingSchedule::empty(), 0.0, &free_cfg)?;
    let free_series = series_of(&free, &part, idx)?;

    let single = schedule_forcing(vec![segment(spec.etas[0], 0.0)?])?;
    let single_cfg = SolverConfig { horizon: spec.window + spec.return_time, ..config.clone() };
    let st = solve_timestepper(&zero, &single, 0.0, &single_cfg)?;
    let ss = series_of(&st, &part, idx)?;
    let single_peak = ss.iter().map(|x| x.1).fold(0.0, f64::max);
    let single_after = ss.last().map(|x| x.1).unwrap_or(0.0);
    profiles.push(NormRecord::from_sample("single_after", &besov_norm(st.last().unwrap().1, &part, idx)?).at_time(spec.window + spec.return_time));

    Ok(StabilityOutcome {
        index: (idx.s, idx.p, idx.q),
        forcing_norms,
        forcing_end,
        envelope_monotone: non_increasing(&series, forcing_end),
        ratio: terminal / peak,
        series,
        peak,
        terminal,
        free_monotone: non_increasing(&free_series, 0.0),
        free_series,
        single_peak,
        single_after,
        single_ratio: single_after / single_peak,
        profiles,
    })
}

// ---------------------------------------------------------------------------
// Oscillation

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscillationRegime {
    /// n = 3, n < r < 2n.
    HighDim,
    /// n = 2, f_N with fixed N.
    TwoDim,
}

#[derive(Clone, Debug)]
pub struct OscillationSpec {
    pub regime: OscillationRegime,
    pub shape: Vec<usize>,
    pub length: f64,
    pub r: f64,
    pub sigma: f64,
    pub rho: f64,
    pub eta: f64,
    /// First carrier; δ₁ = β₁^{−(r−n)/r} and ε = 2δ₁.
    pub beta1: f64,
    pub h: f64,
    pub t_star: Option<f64>,
    pub n_scale: u32,
    pub m: f64,
    pub cycles: usize,
    pub dt: f64,
    pub decay_dt: f64,
    /// Time between norm checks while waiting for a trough.
    pub decay_check: f64,
    /// Longest force-free wait per cycle before declaring the run inconclusive.
    pub decay_cap: f64,
    /// threshold_k = min(factor·η³·2^{−k}, previous trough / 2).
    pub threshold_factor: f64,
    pub sample_stride: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CycleRecord {
    pub k: usize,
    pub t_k: f64,
    /// Critical norm of u(T_k).
    pub norm_at_t_k: f64,
    pub t_peak: f64,
    /// low_block_sup(u(T_k + T_*), 2).
    pub peak: f64,
    /// Critical norm of u(T_k + T_*).
    pub peak_critical: f64,
    /// Lower bound the peak is compared with (ĉ_*η² in 3D, the leading term of u⁽²⁾ in 2D).
    pub floor: f64,
    /// sup_t ‖f(t)‖ over the window (Ḃ^{n/r−3}_{r,σ} in 3D, Ḃ^{−1}_{1,1} in 2D).
    pub forcing_norm: f64,
    pub carrier: f64,
    pub delta: f64,
    pub threshold: f64,
    pub t_next: f64,
    /// Critical norm of u(T_{k+1}).
    pub trough: f64,
    pub conclusive: bool,
    /// peak / trough: the low blocks bound Ḃ^{−1}_{∞,∞} from below, the trough is the full critical norm.
    pub ratio: f64,
    pub max_contraction: f64,
    pub picard_iterations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OscillationOutcome {
    pub regime: OscillationRegime,
    pub cstar: f64,
    pub t_star: f64,
    pub eps: f64,
    pub critical: (f64, f64, f64),
    pub cycles: Vec<CycleRecord>,
    /// max peak / min peak − 1.
    pub peak_spread: f64,
    /// trough_k / trough_{k+1}.
    pub trough_factors: Vec<f64>,
    /// forcing_norm_{k+1} / forcing_norm_k.
    pub forcing_ratios: Vec<f64>,
    pub min_ratio: f64,
    pub conclusive: bool,
    pub series: Table,
    pub profiles: Vec<NormRecord>,
}

/// Leading part of u⁽²⁾(t₀ + 2^{2N}) for f_N: the carrier-free (DC) part of
/// (η²/N)∇^⊥Θ⊗∇^⊥Θ driven over the plateau [t₀+1, t₀+2^{2N}−1]; returns its low-block sup.
pub fn floor_2d(bump: &BumpProfile, m: f64, n_scale: u32, eta: f64) -> Result<f64> {
    let grid = bump.grid();
    let theta = crate::forcing::make_theta(bump, m)?;
    let v = spectral::perp_gradient(&theta)?;
    let q = spectral::leray_project(&spectral::tensor_divergence(&v, &v)?)?;
    let dur = 2f64.powi(2 * n_scale as i32);
    let xi2 = grid.xi2().to_vec();
    let cut = (0.5 * m).powi(2);
    let w = q.map_symbol(|i| {
        let l = xi2[i];
        if l == 0.0 || l > cut {
            0.0
        } else {
            (-l).exp() * -(-l * (dur - 2.0)).exp_m1() / l
        }
    });
    let part = DyadicPartition::for_grid(grid);
    Ok(eta * eta / n_scale as f64 * low_block_sup(&w, &part, 2)?)
}

struct Probe<'a> {
    part: &'a DyadicPartition,
    idx: BesovIndex,
    table: Table,
}

impl Probe<'_> {
    fn record(&mut self, t: f64, f: &SpectralField) -> Result<(f64, f64)> {
        let c = besov_norm(f, self.part, self.idx)?.value;
        let l = low_block_sup(f, self.part, 2)?;
        self.table.push(vec![t, c, l]);
        Ok((c, l))
    }

    fn sample(&self, f: &SpectralField) -> Result<NormSample> {
        besov_norm(f, self.part, self.idx)
    }
}

pub fn run_oscillation(spec: &OscillationSpec) -> Result<OscillationOutcome> {
    if spec.cycles < 2 {
        return Err(Error::InvalidArgument("an oscillation run needs at least 2 cycles".into()));
    }
    let dim = match spec.regime {
        OscillationRegime::HighDim => 3,
        OscillationRegime::TwoDim => 2,
    };
    let grid = Grid::with_shape(dim, &spec.shape, spec.length)?;
    let part = DyadicPartition::for_grid(&grid);
    let bump = default_bump(&grid)?;
    let n = dim as f64;
    let (crit, fidx, norm, t_star, cstar, eps) = match spec.regime {
        OscillationRegime::HighDim => {
            if !(spec.r > n && spec.r < 2.0 * n) {
                return Err(Error::InvalidArgument(format!("r = {} must lie in (n, 2n)", spec.r)));
            }
            let t_star = resolve_t_star(&bump, spec.r, spec.sigma, spec.h, spec.t_star)?;
            let delta1 = spec.beta1.powf(-(spec.r - n) / spec.r);
            (
                BesovIndex::new(n / spec.r - 1.0, spec.r, spec.sigma)?,
                BesovIndex::new(n / spec.r - 3.0, spec.r, spec.sigma)?,
                WorkingNorm::HighDim { r: spec.r, sigma: spec.sigma, rho: spec.rho },
                t_star,
                cstar_for(&bump)?,
                2.0 * delta1,
            )
        }
        OscillationRegime::TwoDim => (
            BesovIndex::new(1.0, 1.0, 1.0)?,
            BesovIndex::new(-1.0, 1.0, 1.0)?,
            WorkingNorm::TwoDim { n: spec.n_scale as f64 },
            2f64.powi(2 * spec.n_scale as i32),
            0.0,
            f64::NAN,
        ),
    };
    let floor2 = if dim == 2 { floor_2d(&bump, spec.m, spec.n_scale, spec.eta)? } else { 0.0 };
    let mut probe = Probe { part: &part, idx: crit, table: Table::new(&["t", "critical", "low_block_sup"]) };
    let mut profiles = Vec::new();
    let mut cycles: Vec<CycleRecord> = Vec::new();
    let mut u = SpectralField::zeros(&grid, dim);
    let mut t_k = 0.0;
    let mut conclusive = true;
    let eta = spec.eta;
    for k in 1..=spec.cycles {
        let seg = match spec.regime {
            OscillationRegime::HighDim => forcing_highdim(
                &bump,
                &HighDimSpec {
                    carrier: Carrier::Delta(eps * 2f64.powi(-(k as i32))),
                    eta,
                    t0: t_k,
                    t_star,
                    h: spec.h,
                    r: spec.r,
                    sigma: spec.sigma,
                    strict_delta: false,
                },
            )?,
            OscillationRegime::TwoDim => {
                forcing_2d(&bump, &TwoDimSpec { n_scale: spec.n_scale, m: spec.m, eta, t0: t_k })?
            }
        };
        let carrier = *seg.params.get("beta").or_else(|| seg.params.get("m")).unwrap_or(&f64::NAN);
        let delta = *seg.params.get("delta").unwrap_or(&f64::NAN);
        let sched = schedule_forcing(vec![seg])?;
        let forcing_norm = sched.window_sup_norms(&part, fidx, 8)?[0];
        let norm_at_t_k = probe.sample(&u)?.value;
        let t_peak = t_k + t_star;
        let config = SolverConfig {
            dt: spec.dt,
            horizon: t_peak,
            sample_stride: spec.sample_stride,
            ..Default::default()
        };
        let (traj, reports) = solve_mild(&u, &sched, t_k, norm, &config)?;
        for (t, f) in traj.iter() {
            if t > t_k || k == 1 {
                probe.record(t, f)?;
            }
        }
        u = traj.last().ok_or(Error::EmptyTrajectory)?.1.clone();
        let peak = low_block_sup(&u, &part, 2)?;
        let peak_sample = probe.sample(&u)?;
        let peak_critical = peak_sample.value;
        profiles.push(NormRecord::from_sample(format!("peak_critical_{k}"), &peak_sample).at_time(t_peak));
        let floor = match spec.regime {
            OscillationRegime::HighDim => cstar * eta * eta,
            OscillationRegime::TwoDim => floor2,
        };

        // force-free decay until the critical norm drops below the cycle threshold
        let mut threshold = spec.threshold_factor * eta.powi(3) * 2f64.powi(-(k as i32));
        if let Some(prev) = cycles.last() {
            threshold = threshold.min(0.5 * prev.trough);
        }
        let mut t = t_peak;
        let mut ok = false;
        let free = ForcingSchedule::empty();
        loop {
            let c = probe.sample(&u)?.value;
            if c <= threshold {
                ok = true;
                break;
            }
            if t - t_peak >= spec.decay_cap {
                break;
            }
            let cfg = SolverConfig {
                dt: spec.decay_dt,
                horizon: t + spec.decay_check,
                sample_stride: usize::MAX,
                ..Default::default()
            };
            let tr = solve_timestepper(&u, &free, t, &cfg)?;
            u = tr.last().ok_or(Error::EmptyTrajectory)?.1.clone();
            t += spec.decay_check;
            probe.record(t, &u)?;
        }
        conclusive &= ok;
        let trough_sample = probe.sample(&u)?;
        profiles.push(NormRecord::from_sample(format!("trough_critical_{k}"), &trough_sample).at_time(t));
        cycles.push(CycleRecord {
            k,
            t_k,
            norm_at_t_k,
            t_peak,
            peak,
            peak_critical,
            floor,
            forcing_norm,
            carrier,
            delta,
            threshold,
            t_next: t,
            trough: trough_sample.value,
            conclusive: ok,
            ratio: peak / trough_sample.value,
            max_contraction: max_ratio(&reports),
            picard_iterations: max_iterations(&reports),
        });
        t_k = t;
        if !ok {
            break;
        }
    }
    let peaks: Vec<f64> = cycles.iter().map(|c| c.peak).collect();
    let pmax = peaks.iter().copied().fold(0.0, f64::max);
    let pmin = peaks.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(OscillationOutcome {
        regime: spec.regime,
        cstar,
        t_star,
        eps,
        critical: (crit.s, crit.p, crit.q),
        peak_spread: pmax / pmin - 1.0,
        trough_factors: cycles.windows(2).map(|w| w[0].trough / w[1].trough).collect(),
        forcing_ratios: cycles.windows(2).map(|w| w[1].forcing_norm / w[0].forcing_norm).collect(),
        min_ratio: cycles.iter().map(|c| c.ratio).fold(f64::INFINITY, f64::min),
        conclusive: conclusive && cycles.len() == spec.cycles,
        cycles,
        series: probe.table,
        profiles,
    })
}

// ---------------------------------------------------------------------------
// Non-oscillating forcing

#[derive(Clone, Debug)]
pub struct NonoscRunSpec {
    pub variant: NonoscVariant,
    pub eps: f64,
    pub eta: f64,
    pub p: f64,
    pub length: f64,
    /// Grid and Fourier radius of the bump used for the forcing decay fit.
    pub fit_shape: Vec<usize>,
    pub fit_radius: f64,
    /// Fit samples at β(t) = 2^j, j in this range.
    pub fit_octaves: (i32, i32),
    /// Grid, horizon and step of the u⁽²⁾ run.
    pub tail_shape: Vec<usize>,
    pub tail_horizon: f64,
    pub dt: f64,
    pub sample_stride: usize,
    pub k0: i32,
    /// Horizon of the I₁ partial sums (p = n).
    pub i1_horizon: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonoscOutcome {
    pub variant: NonoscVariant,
    /// (t, ‖f(t)‖_{Ḃ^{n/p−3}_{p,2}}) at the fit samples.
    pub fit: Vec<(f64, f64)>,
    pub slope: f64,
    pub expected_slope: f64,
    pub edge_ratio: f64,
    /// (t, low_block_sup(u⁽²⁾(t), 2)).
    pub tail: Vec<(f64, f64)>,
    /// ‖(−Δ)^{−1}ℙΦ‖_{Ḃ^{−1}_{∞,∞}} proxy for the tail bump.
    pub c_phi: f64,
    pub floor_target: f64,
    pub tail_min: f64,
    pub tail_trend: f64,
    pub i1: f64,
    pub i1_lower: f64,
    pub profiles: Vec<NormRecord>,
}

pub fn run_nonosc(spec: &NonoscRunSpec) -> Result<NonoscOutcome> {
    let n = 3.0;
    let mut profiles = Vec::new();
    let (fit, slope, expected_slope, edge_ratio) = match spec.variant {
        NonoscVariant::HighDim => {
            let grid = Grid::with_shape(3, &spec.fit_shape, spec.length)?;
            let bump = make_bump_with(&grid, BumpStyle::Positive, spec.fit_radius)?;
            let alpha = 1.0 / (1.0 - n / spec.p);
            let beta0 = spec.eps.powf(-alpha);
            let s_end = 2f64.powi(spec.fit_octaves.1) / beta0;
            let horizon = (s_end - 1.0) / beta0;
            let seg = forcing_nonosc(
                &bump,
                &NonoscSpec { variant: spec.variant, eps: spec.eps, eta: spec.eta, p: spec.p, t0: 0.0, horizon, k0: 0 },
            )?;
            let part = DyadicPartition::for_grid(&grid);
            let idx = BesovIndex::new(n / spec.p - 3.0, spec.p, 2.0)?;
            let mut fit = Vec::new();
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for j in spec.fit_octaves.0..=spec.fit_octaves.1 {
                // β(t) = β₀(1 + β₀t) = 2^j
                let s = 2f64.powi(j) / beta0;
                let t = (s - 1.0) / beta0;
                if t < 0.0 {
                    continue;
                }
                let ns = besov_norm(&seg.eval(t)?, &part, idx)?;
                profiles.push(NormRecord::from_sample(format!("forcing_beta_2^{j}"), &ns).at_time(t));
                fit.push((t, ns.value));
                xs.push(s.ln());
                ys.push(ns.value.ln());
            }
            let slope = fit_slope(&xs, &ys);
            (fit, slope, -(1.0 - n / spec.p), seg.certificates["edge_ratio"])
        }
        NonoscVariant::Lacunary => (Vec::new(), f64::NAN, f64::NAN, f64::NAN),
    };

    let grid = Grid::with_shape(3, &spec.tail_shape, spec.length)?;
    let bump = make_bump_with(&grid, BumpStyle::Plateau, 1.0)?;
    let part = DyadicPartition::for_grid(&grid);
    let seg = forcing_nonosc(
        &bump,
        &NonoscSpec {
            variant: spec.variant,
            eps: spec.eps,
            eta: spec.eta,
            p: spec.p,
            t0: 0.0,
            horizon: spec.tail_horizon,
            k0: spec.k0,
        },
    )?;
    let sched = schedule_forcing(vec![seg])?;
    let zero = SpectralField::zeros(&grid, 3);
    let config = SolverConfig {
        dt: spec.dt,
        horizon: spec.tail_horizon,
        sample_stride: spec.sample_stride,
        ..Default::default()
    };
    let mut u1 = DuhamelStream::new(&sched, &zero, 0.0, spec.dt);
    let u2 = second_iteration(&mut u1, 0.0, spec.tail_horizon, &config)?;
    let tail: Vec<(f64, f64)> =
        u2.iter().map(|(t, f)| Ok((t, low_block_sup(f, &part, 2)?))).collect::<Result<_>>()?;
    let pot = phi_potential(&bump)?;
    let c_phi = low_block_sup(&pot, &part, 2)?;
    let floor_target = 0.5 * spec.eta * spec.eta * c_phi;
    let half: Vec<(f64, f64)> = tail.iter().copied().filter(|x| x.0 >= 0.5 * spec.tail_horizon).collect();
    let tail_min = half.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let tail_trend = if half.len() >= 2 {
        fit_slope(&half.iter().map(|x| x.0).collect::<Vec<_>>(), &half.iter().map(|x| x.1).collect::<Vec<_>>())
    } else {
        f64::NAN
    };
    let end = u2.last().ok_or(Error::EmptyTrajectory)?;
    let linf = BesovIndex::new(-1.0, f64::INFINITY, f64::INFINITY)?;
    profiles.push(NormRecord::from_sample("u2_terminal", &besov_norm(end.1, &part, linf)?).at_time(end.0));

    let i1 = i1_partial_sum(spec.eps, spec.i1_horizon);
    Ok(NonoscOutcome {
        variant: spec.variant,
        fit,
        slope,
        expected_slope,
        edge_ratio,
        tail,
        c_phi,
        floor_target,
        tail_min,
        tail_trend,
        i1,
        i1_lower: 1.0 - 2.0 / spec.i1_horizon.ln(),
        profiles,
    })
}

//! Duhamel integration, the iteration u = u⁽¹⁾ + u⁽²⁾ + ũ and an ETD-RK2 time-stepper.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SpectralField, Trajectory};
use crate::forcing::{ForcingSchedule, ForcingSegment};
use crate::grid::Grid;
use crate::lp::{chemin_lerner_from_table, weak_lebesgue_norm, BesovIndex, DyadicPartition};
use crate::spectral;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    /// Absolute end time of a run.
    pub horizon: f64,
    /// Relative fixed-point tolerance.
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Keep every `sample_stride`-th node in output trajectories.
    pub sample_stride: usize,
    /// Steps per Picard slab.
    pub slab_steps: usize,
    /// Evaluate the working norms of u⁽¹⁾, u⁽²⁾, ũ on output samples.
    pub track_norms: bool,
    /// L² norm beyond which the time-stepper aborts.
    pub blowup: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 0.01,
            horizon: 1.0,
            picard_tol: 1e-8,
            picard_max_iter: 20,
            sample_stride: 10,
            slab_steps: 8,
            track_norms: false,
            blowup: 1e6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.dt > 0.0) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.picard_tol > 0.0 && self.picard_tol <= 1e-3) {
            return bad(format!("picard_tol = {} must lie in (0, 1e-3]", self.picard_tol));
        }
        if self.picard_max_iter == 0 || self.sample_stride == 0 || self.slab_steps == 0 {
            return bad("picard_max_iter, sample_stride and slab_steps must be positive".into());
        }
        Ok(())
    }

    fn check_span(&self, t0: f64, t1: f64) -> Result<()> {
        self.validate()?;
        if !(t1 - t0 >= self.dt) {
            return Err(Error::InvalidArgument(format!(
                "interval [{t0}, {t1}] is shorter than dt = {}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// φ₁(λ,h) = (1 − e^{−λh})/λ = ∫₀^h e^{−λ(h−s)} ds.
fn phi1(lambda: f64, h: f64) -> f64 {
    let z = lambda * h;
    if z < 1e-8 {
        h * (1.0 - 0.5 * z)
    } else {
        -(-z).exp_m1() / lambda
    }
}

/// φ₂(λ,h) = ∫₀^h e^{−λ(h−s)} (s/h) ds.
fn phi2(lambda: f64, h: f64) -> f64 {
    let z = lambda * h;
    if z < 1e-4 {
        h * (0.5 - z / 6.0 + z * z / 24.0)
    } else {
        ((-z).exp_m1() + z) / (lambda * z)
    }
}

/// Per-mode tables of e^{−|ξ|²h}, φ₁ and φ₂ for one step size.
#[derive(Clone, Debug)]
pub struct Propagator {
    h: f64,
    decay: Vec<f64>,
    phi1: Vec<f64>,
    phi2: Vec<f64>,
}

impl Propagator {
    pub fn new(grid: &Grid, h: f64) -> Self {
        let xi2 = grid.xi2();
        Propagator {
            h,
            decay: xi2.iter().map(|&l| (-l * h).exp()).collect(),
            phi1: xi2.iter().map(|&l| phi1(l, h)).collect(),
            phi2: xi2.iter().map(|&l| phi2(l, h)).collect(),
        }
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn heat(&self, f: &SpectralField) -> SpectralField {
        f.map_symbol(|i| self.decay[i])
    }

    /// e^{hΔ}x + a·φ₁·s.
    pub fn exp_euler(&self, x: &SpectralField, a: f64, s: &SpectralField) -> Result<SpectralField> {
        combine(x, |i| self.decay[i], s, |i| a * self.phi1[i])
    }

    pub fn apply_phi1(&self, s: &SpectralField) -> SpectralField {
        s.map_symbol(|i| self.phi1[i])
    }

    pub fn apply_phi2(&self, s: &SpectralField) -> SpectralField {
        s.map_symbol(|i| self.phi2[i])
    }
}

fn combine(
    x: &SpectralField,
    mx: impl Fn(usize) -> f64,
    y: &SpectralField,
    my: impl Fn(usize) -> f64,
) -> Result<SpectralField> {
    x.grid().check_same(y.grid())?;
    if x.ncomp() != y.ncomp() {
        return Err(Error::ComponentMismatch { expected: x.ncomp(), found: y.ncomp() });
    }
    let comps = x
        .components()
        .iter()
        .zip(y.components())
        .map(|(a, b)| a.iter().zip(b).enumerate().map(|(i, (p, q))| p * mx(i) + q * my(i)).collect())
        .collect();
    SpectralField::from_components(x.grid(), comps, x.is_real() && y.is_real())
}

/// ∫_t^{t+h} e^{(t+h−τ)Δ} ℙf(τ) dτ with f frozen at the midpoint of each of `substeps` pieces.
pub fn forcing_increment(
    schedule: &ForcingSchedule,
    grid: &Grid,
    t: f64,
    sub: &Propagator,
    substeps: usize,
) -> Result<SpectralField> {
    let hs = sub.step();
    let mut acc = SpectralField::zeros(grid, grid.dim());
    for k in 0..substeps {
        acc = sub.heat(&acc);
        let mid = t + (k as f64 + 0.5) * hs;
        if schedule.active(mid).is_some() {
            let f = spectral::leray_project(&schedule.eval(grid, mid)?)?;
            acc.axpy(1.0, &sub.apply_phi1(&f))?;
        }
    }
    Ok(acc)
}

/// A vector field available at non-decreasing times.
pub trait FieldStream {
    fn grid(&self) -> &Grid;
    /// Value at `t`; successive calls must not go backwards in time.
    fn value_at(&mut self, t: f64) -> Result<SpectralField>;
}

fn backwards(t: f64, now: f64) -> Error {
    Error::InvalidArgument(format!("stream queried at t = {t} after t = {now}"))
}

/// Linear mild solution e^{(t−t₀)Δ}a + ∫ e^{(t−τ)Δ}ℙf dτ, advanced in substeps of dt/2.
pub struct DuhamelStream<'a> {
    schedule: &'a ForcingSchedule,
    grid: Grid,
    state: SpectralField,
    base: f64,
    steps: u64,
    prop: Propagator,
}

impl<'a> DuhamelStream<'a> {
    pub fn new(schedule: &'a ForcingSchedule, a: &SpectralField, t0: f64, dt: f64) -> Self {
        let grid = a.grid().clone();
        DuhamelStream {
            schedule,
            prop: Propagator::new(&grid, 0.5 * dt),
            grid,
            state: a.clone(),
            base: t0,
            steps: 0,
        }
    }

    fn now(&self) -> f64 {
        self.base + self.steps as f64 * self.prop.step()
    }

    fn advance(&mut self, p: &Propagator, t: f64) -> Result<()> {
        let inc = forcing_increment(self.schedule, &self.grid, t, p, 1)?;
        self.state = p.heat(&self.state);
        self.state.axpy(1.0, &inc)
    }
}

impl FieldStream for DuhamelStream<'_> {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn value_at(&mut self, t: f64) -> Result<SpectralField> {
        let h = self.prop.step();
        let tol = 1e-9 * h;
        if t < self.now() - tol {
            return Err(backwards(t, self.now()));
        }
        let target = (t - self.base) / h;
        let whole = (target + 1e-9).floor() as u64;
        while self.steps < whole {
            let t = self.now();
            let p = self.prop.clone();
            self.advance(&p, t)?;
            self.steps += 1;
        }
        let rest = t - self.now();
        if rest > tol {
            let p = Propagator::new(&self.grid, rest);
            let now = self.now();
            self.advance(&p, now)?;
            self.base = t;
            self.steps = 0;
        }
        Ok(self.state.clone())
    }
}

/// Closed-form u⁽¹⁾ of a segment that provides one, plus the heat flow of `a`.
pub struct ClosedFormStream<'a> {
    segment: &'a ForcingSegment,
    a: SpectralField,
    t0: f64,
}

impl<'a> ClosedFormStream<'a> {
    pub fn new(segment: &'a ForcingSegment, a: &SpectralField, t0: f64) -> Result<Self> {
        if segment.closed_form_u1(segment.start)?.is_none() {
            return Err(Error::InvalidArgument(format!("{} forcing has no closed-form response", segment.kind)));
        }
        Ok(ClosedFormStream { segment, a: a.clone(), t0 })
    }
}

impl FieldStream for ClosedFormStream<'_> {
    fn grid(&self) -> &Grid {
        self.segment.grid()
    }

    fn value_at(&mut self, t: f64) -> Result<SpectralField> {
        let mut u = spectral::heat_propagate(&self.a, (t - self.t0).max(0.0))?;
        if t > self.segment.start {
            let tc = t.min(self.segment.stop);
            let mut v = self.segment.closed_form_u1(tc)?.expect("checked in new");
            if t > tc {
                v = spectral::heat_propagate(&v, t - tc)?;
            }
            u.axpy(1.0, &v)?;
        }
        Ok(u)
    }
}

/// Reads a stored trajectory, interpolating linearly between samples.
pub struct TrajectoryStream<'a> {
    traj: &'a Trajectory,
    cursor: usize,
    last: f64,
}

impl<'a> TrajectoryStream<'a> {
    pub fn new(traj: &'a Trajectory) -> Result<Self> {
        if traj.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        let last = traj.times()[0];
        Ok(TrajectoryStream { traj, cursor: 0, last })
    }
}

impl FieldStream for TrajectoryStream<'_> {
    fn grid(&self) -> &Grid {
        self.traj.grid()
    }

    fn value_at(&mut self, t: f64) -> Result<SpectralField> {
        let times = self.traj.times();
        let last = times.len() - 1;
        let span = times[last] - times[0];
        let tol = 1e-9 * span.max(1.0);
        if t < times[0] - tol || t > times[last] + tol {
            return Err(Error::InvalidArgument(format!(
                "t = {t} outside the sampled interval [{}, {}]",
                times[0], times[last]
            )));
        }
        if t < self.last - tol {
            return Err(backwards(t, self.last));
        }
        self.last = t;
        while self.cursor < last && times[self.cursor + 1] <= t + tol {
            self.cursor += 1;
        }
        let s = self.traj.samples();
        if (t - times[self.cursor]).abs() <= tol || self.cursor == last {
            return Ok(s[self.cursor].clone());
        }
        let w = (t - times[self.cursor]) / (times[self.cursor + 1] - times[self.cursor]);
        let mut v = s[self.cursor].scaled(1.0 - w);
        v.axpy(w, &s[self.cursor + 1])?;
        Ok(v)
    }
}

/// u⁽²⁾ marched in steps of dt from zero data; the quadratic source uses u⁽¹⁾ at step midpoints.
pub struct SecondIterateStream<'a> {
    u1: Box<dyn FieldStream + 'a>,
    state: SpectralField,
    base: f64,
    steps: u64,
    prop: Propagator,
    mask: Option<Box<dyn Fn(f64) -> bool + 'a>>,
}

impl<'a> SecondIterateStream<'a> {
    pub fn new(u1: Box<dyn FieldStream + 'a>, t0: f64, dt: f64) -> Self {
        let grid = u1.grid().clone();
        SecondIterateStream {
            state: SpectralField::zeros(&grid, grid.dim()),
            prop: Propagator::new(&grid, dt),
            u1,
            base: t0,
            steps: 0,
            mask: None,
        }
    }

    /// Keeps only sources whose midpoint satisfies `keep`.
    pub fn with_source_mask(mut self, keep: impl Fn(f64) -> bool + 'a) -> Self {
        self.mask = Some(Box::new(keep));
        self
    }

    fn now(&self) -> f64 {
        self.base + self.steps as f64 * self.prop.step()
    }

    fn advance(&mut self, p: &Propagator, t: f64) -> Result<()> {
        let mid = t + 0.5 * p.step();
        let active = self.mask.as_ref().is_none_or(|m| m(mid));
        if active {
            let s = spectral::nonlinear_self(&self.u1.value_at(mid)?)?;
            self.state = p.exp_euler(&self.state, -1.0, &s)?;
        } else {
            self.state = p.heat(&self.state);
        }
        Ok(())
    }
}

impl FieldStream for SecondIterateStream<'_> {
    fn grid(&self) -> &Grid {
        self.u1.grid()
    }

    fn value_at(&mut self, t: f64) -> Result<SpectralField> {
        let h = self.prop.step();
        let tol = 1e-9 * h;
        if t < self.now() - tol {
            return Err(backwards(t, self.now()));
        }
        let whole = ((t - self.base) / h + 1e-9).floor() as u64;
        while self.steps < whole {
            let now = self.now();
            let p = self.prop.clone();
            self.advance(&p, now)?;
            self.steps += 1;
        }
        let rest = t - self.now();
        if rest > tol {
            let p = Propagator::new(self.u1.grid(), rest);
            let now = self.now();
            self.advance(&p, now)?;
            self.base = t;
            self.steps = 0;
        }
        Ok(self.state.clone())
    }
}

/// Uniform node times on [t0, t1] with spacing ≤ dt.
fn nodes(t0: f64, t1: f64, dt: f64) -> (usize, f64) {
    let n = ((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize;
    (n, (t1 - t0) / n as f64)
}

fn keep_sample(i: usize, n: usize, stride: usize) -> bool {
    i % stride == 0 || i == n
}

/// Samples a stream on the node grid of [t0, t1].
pub fn sample_stream(stream: &mut dyn FieldStream, t0: f64, t1: f64, config: &SolverConfig) -> Result<Trajectory> {
    config.check_span(t0, t1)?;
    let (n, h) = nodes(t0, t1, config.dt);
    let mut traj = Trajectory::new(stream.grid());
    for i in 0..=n {
        let t = if i == n { t1 } else { t0 + i as f64 * h };
        let v = stream.value_at(t)?;
        if keep_sample(i, n, config.sample_stride) {
            traj.push(t, v)?;
        }
    }
    Ok(traj)
}

/// Linear mild solution e^{(t−t₀)Δ}a + ∫_{t₀}^t e^{(t−τ)Δ}ℙf(τ)dτ on [t₀, t₁].
pub fn duhamel(
    schedule: &ForcingSchedule,
    a: &SpectralField,
    t0: f64,
    t1: f64,
    config: &SolverConfig,
) -> Result<Trajectory> {
    let (_, h) = nodes(t0, t1, config.dt);
    let mut s = DuhamelStream::new(schedule, a, t0, h);
    sample_stream(&mut s, t0, t1, config)
}

/// u⁽²⁾ = −∫ e^{(t−τ)Δ}ℙdiv(u⁽¹⁾⊗u⁽¹⁾)dτ on [t₀, t₁].
pub fn second_iteration(u1: &mut dyn FieldStream, t0: f64, t1: f64, config: &SolverConfig) -> Result<Trajectory> {
    second_iteration_masked(u1, t0, t1, config, |_| true)
}

/// As [`second_iteration`], with the source kept only at times where `keep` holds.
pub fn second_iteration_masked(
    u1: &mut dyn FieldStream,
    t0: f64,
    t1: f64,
    config: &SolverConfig,
    keep: impl Fn(f64) -> bool,
) -> Result<Trajectory> {
    let (_, h) = nodes(t0, t1, config.dt);
    let borrowed = BorrowedStream(u1);
    let mut s = SecondIterateStream::new(Box::new(borrowed), t0, h).with_source_mask(keep);
    sample_stream(&mut s, t0, t1, config)
}

struct BorrowedStream<'a>(&'a mut dyn FieldStream);

impl FieldStream for BorrowedStream<'_> {
    fn grid(&self) -> &Grid {
        self.0.grid()
    }
    fn value_at(&mut self, t: f64) -> Result<SpectralField> {
        self.0.value_at(t)
    }
}

/// Norm in which the fixed point for ũ is measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum WorkingNorm {
    /// L^∞L^{n,∞} + L̃^∞Ḃ^{n/r−1}_{r,σ} + L̃^ρḂ^{n/r−1+2/ρ}_{r,σ}.
    HighDim { r: f64, sigma: f64, rho: f64 },
    /// X^N = L̃^∞Ḃ¹_{1,1} ∩ L̃^NḂ^{1+2/N}_{1,2}.
    TwoDim { n: f64 },
}

/// Per-sample data from which a working norm is assembled.
#[derive(Clone, Debug, Default)]
pub struct NormRows {
    pub times: Vec<f64>,
    pub blocks: Vec<Vec<f64>>,
    pub weak: Vec<f64>,
}

/// Components of a working norm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormParts {
    pub x: f64,
    pub y_sup: f64,
    pub y_int: f64,
    pub total: f64,
}

impl WorkingNorm {
    fn block_p(&self) -> f64 {
        match self {
            WorkingNorm::HighDim { r, .. } => *r,
            WorkingNorm::TwoDim { .. } => 1.0,
        }
    }

    pub fn push_row(&self, rows: &mut NormRows, part: &DyadicPartition, t: f64, f: &SpectralField) -> Result<()> {
        rows.times.push(t);
        rows.blocks.push(part.block_lp(f, self.block_p())?);
        if let WorkingNorm::HighDim { .. } = self {
            rows.weak.push(weak_lebesgue_norm(f, f.grid().dim() as f64)?);
        }
        Ok(())
    }

    pub fn evaluate(&self, part: &DyadicPartition, rows: &NormRows) -> Result<NormParts> {
        if rows.times.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        let two = rows.times.len() >= 2;
        let cl = |s: f64, p: f64, q: f64, r: f64| -> Result<f64> {
            if r.is_finite() && !two {
                return Ok(0.0);
            }
            let idx = BesovIndex::new(s, p, q)?.with_time(r)?;
            Ok(chemin_lerner_from_table(&rows.times, &rows.blocks, part, idx)?.value)
        };
        let out = match *self {
            WorkingNorm::HighDim { r, sigma, rho } => {
                let n = part.grid().dim() as f64;
                let x = rows.weak.iter().copied().fold(0.0, f64::max);
                let y_sup = cl(n / r - 1.0, r, sigma, f64::INFINITY)?;
                let y_int = cl(n / r - 1.0 + 2.0 / rho, r, sigma, rho)?;
                NormParts { x, y_sup, y_int, total: x + y_sup + y_int }
            }
            WorkingNorm::TwoDim { n } => {
                let y_sup = cl(1.0, 1.0, 1.0, f64::INFINITY)?;
                let y_int = n.sqrt() * cl(1.0 + 2.0 / n, 1.0, 2.0, n)?;
                NormParts { x: 0.0, y_sup, y_int, total: y_sup + y_int }
            }
        };
        Ok(out)
    }

    /// Working norm of a stored trajectory.
    pub fn of_trajectory(&self, part: &DyadicPartition, traj: &Trajectory) -> Result<NormParts> {
        let mut rows = NormRows::default();
        for (t, f) in traj.iter() {
            self.push_row(&mut rows, part, t, f)?;
        }
        self.evaluate(part, &rows)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    /// ‖ũ_{m+1} − ũ_m‖/‖ũ_m − ũ_{m−1}‖ per iteration index, max over slabs.
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
    /// Largest iteration count over slabs.
    pub iterations: usize,
    /// Largest final relative increment over slabs.
    pub final_residual: f64,
    pub slabs: usize,
    /// Working norms of u⁽¹⁾, u⁽²⁾, ũ when tracked.
    pub norms: BTreeMap<String, f64>,
}

impl IterationReport {
    fn absorb_ratio(&mut self, m: usize, r: f64) {
        if self.contraction_ratios.len() < m {
            self.contraction_ratios.resize(m, 0.0);
        }
        let e = &mut self.contraction_ratios[m - 1];
        *e = e.max(r);
    }

    fn merge(&mut self, other: &IterationReport) {
        for (m, &r) in other.contraction_ratios.iter().enumerate() {
            self.absorb_ratio(m + 1, r);
        }
        self.converged = self.converged && other.converged;
        self.iterations = self.iterations.max(other.iterations);
        self.final_residual = self.final_residual.max(other.final_residual);
        self.slabs += other.slabs;
    }
}

/// Result of the iteration on one interval.
pub struct MildWindow {
    pub remainder: Trajectory,
    /// u⁽¹⁾ + u⁽²⁾ + ũ at the sample times.
    pub total: Trajectory,
    pub report: IterationReport,
    pub terminal: SpectralField,
}

fn max_l2(fields: &[SpectralField]) -> f64 {
    fields.iter().map(|f| f.l2_norm()).fold(0.0, f64::max)
}

/// Fixed point ũ of ũ = −∫ e^{(t−τ)Δ}ℙdiv(U⊗U − u⁽¹⁾⊗u⁽¹⁾)dτ, U = u⁽¹⁾ + u⁽²⁾ + ũ, ũ(t₀) = 0.
pub fn picard_remainder(
    u1: &mut dyn FieldStream,
    u2: &mut dyn FieldStream,
    t0: f64,
    t1: f64,
    norm: WorkingNorm,
    config: &SolverConfig,
) -> Result<(Trajectory, IterationReport)> {
    let w = iterate_window(u1, u2, t0, t1, norm, config)?;
    Ok((w.remainder, w.report))
}

/// Runs the slab-wise fixed point on [t₀, t₁] and assembles u = u⁽¹⁾ + u⁽²⁾ + ũ.
pub fn iterate_window(
    u1: &mut dyn FieldStream,
    u2: &mut dyn FieldStream,
    t0: f64,
    t1: f64,
    norm: WorkingNorm,
    config: &SolverConfig,
) -> Result<MildWindow> {
    config.check_span(t0, t1)?;
    let grid = u1.grid().clone();
    grid.check_same(u2.grid())?;
    let part = DyadicPartition::for_grid(&grid);
    let (n, h) = nodes(t0, t1, config.dt);
    let prop = Propagator::new(&grid, h);
    let time = |i: usize| if i == n { t1 } else { t0 + i as f64 * h };

    let mut report = IterationReport { converged: true, ..Default::default() };
    let mut remainder = Trajectory::new(&grid);
    let mut total = Trajectory::new(&grid);
    let mut rows = [NormRows::default(), NormRows::default(), NormRows::default()];

    let mut start = 0usize;
    let mut tilde0 = SpectralField::zeros(&grid, grid.dim());
    let mut u1_node0 = u1.value_at(t0)?;
    let mut u2_node0 = u2.value_at(t0)?;
    let mut terminal = tilde0.clone();
    while start < n {
        let m = config.slab_steps.min(n - start);
        let mut mids = Vec::with_capacity(m);
        let mut u1n = vec![u1_node0.clone()];
        let mut u2n = vec![u2_node0.clone()];
        for k in 0..m {
            let ta = time(start + k);
            let tb = time(start + k + 1);
            mids.push(u1.value_at(0.5 * (ta + tb))?);
            u1n.push(u1.value_at(tb)?);
            u2n.push(u2.value_at(tb)?);
        }
        let u2mid: Vec<SpectralField> = (0..m)
            .map(|k| {
                let mut v = u2n[k].scaled(0.5);
                v.axpy(0.5, &u2n[k + 1])?;
                Ok(v)
            })
            .collect::<Result<_>>()?;
        let mut old = vec![tilde0.clone(); m + 1];
        let mut prev_diff: Option<f64> = None;
        let mut above = 0;
        let mut slab = IterationReport { converged: false, slabs: 1, ..Default::default() };
        for it in 1..=config.picard_max_iter {
            let mut new = Vec::with_capacity(m + 1);
            new.push(tilde0.clone());
            for k in 0..m {
                let mut big = u2mid[k].add(&mids[k])?;
                big.axpy(0.5, &old[k])?;
                big.axpy(0.5, &old[k + 1])?;
                let s = spectral::nonlinear_difference(&big, &mids[k])?;
                let next = prop.exp_euler(&new[k], -1.0, &s)?;
                new.push(next);
            }
            let diffs: Vec<SpectralField> =
                new.iter().zip(&old).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
            let dl2 = max_l2(&diffs);
            let scale = max_l2(&new);
            let resid = if dl2 == 0.0 { 0.0 } else { dl2 / scale };
            // working norm of the increment on two nodes of the slab
            let mut drows = NormRows::default();
            let picks: Vec<usize> = if m >= 2 { vec![m / 2, m] } else { vec![m] };
            for &p in &picks {
                norm.push_row(&mut drows, &part, time(start + p), &diffs[p])?;
            }
            let dnorm = norm.evaluate(&part, &drows)?.total;
            if let Some(pd) = prev_diff {
                if pd > 0.0 {
                    let ratio = dnorm / pd;
                    slab.absorb_ratio(it - 1, ratio);
                    if ratio >= 1.0 {
                        above += 1;
                        if above >= 2 {
                            return Err(Error::NonContraction { ratio, iteration: it });
                        }
                    } else {
                        above = 0;
                    }
                }
            }
            prev_diff = Some(dnorm);
            old = new;
            slab.iterations = it;
            slab.final_residual = resid;
            if resid <= config.picard_tol {
                slab.converged = true;
                break;
            }
        }
        if !slab.converged {
            return Err(Error::MaxIterations(config.picard_max_iter));
        }
        report.merge(&slab);
        for k in 0..=m {
            let i = start + k;
            if (k > 0 || start == 0) && keep_sample(i, n, config.sample_stride) {
                let t = time(i);
                let mut u = u1n[k].add(&u2n[k])?;
                u.axpy(1.0, &old[k])?;
                if config.track_norms {
                    norm.push_row(&mut rows[0], &part, t, &u1n[k])?;
                    norm.push_row(&mut rows[1], &part, t, &u2n[k])?;
                    norm.push_row(&mut rows[2], &part, t, &old[k])?;
                }
                remainder.push(t, old[k].clone())?;
                total.push(t, u)?;
            }
        }
        tilde0 = old[m].clone();
        u1_node0 = u1n[m].clone();
        u2_node0 = u2n[m].clone();
        terminal = {
            let mut u = u1_node0.add(&u2_node0)?;
            u.axpy(1.0, &tilde0)?;
            u
        };
        start += m;
    }
    if config.track_norms {
        for (name, r) in ["u1", "u2", "remainder"].iter().zip(&rows) {
            let p = norm.evaluate(&part, r)?;
            report.norms.insert(format!("{name}_x"), p.x);
            report.norms.insert(format!("{name}_y_sup"), p.y_sup);
            report.norms.insert(format!("{name}_y_int"), p.y_int);
            report.norms.insert(format!("{name}_total"), p.total);
        }
    }
    Ok(MildWindow { remainder, total, report, terminal })
}

/// Times at which the mild construction restarts: segment starts inside (t_start, horizon).
pub fn restart_times(schedule: &ForcingSchedule, t_start: f64, horizon: f64) -> Vec<f64> {
    let mut v = vec![t_start];
    for s in schedule.segments() {
        if s.start > t_start && s.start < horizon {
            v.push(s.start);
        }
    }
    v.push(horizon);
    v
}

/// Mild solution on [t_start, horizon], restarted at each segment start from the
/// terminal state of the previous window.
pub fn solve_mild(
    a: &SpectralField,
    schedule: &ForcingSchedule,
    t_start: f64,
    norm: WorkingNorm,
    config: &SolverConfig,
) -> Result<(Trajectory, Vec<IterationReport>)> {
    let breaks = restart_times(schedule, t_start, config.horizon);
    let mut out = Trajectory::new(a.grid());
    let mut reports = Vec::new();
    let mut data = a.clone();
    for w in breaks.windows(2) {
        let (w0, w1) = (w[0], w[1]);
        let (_, h) = nodes(w0, w1, config.dt);
        let mut s1 = DuhamelStream::new(schedule, &data, w0, h);
        let inner = DuhamelStream::new(schedule, &data, w0, h);
        let mut s2 = SecondIterateStream::new(Box::new(inner), w0, h);
        let win = iterate_window(&mut s1, &mut s2, w0, w1, norm, config)?;
        out.extend(win.total)?;
        reports.push(win.report);
        data = win.terminal;
    }
    Ok((out, reports))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepperReport {
    pub steps: usize,
    /// max over samples of ‖div u‖_{L^∞}.
    pub max_divergence: f64,
    /// max_t |E(t) − E(t₀) − ∫(⟨f,u⟩ − ‖∇u‖²)| / max_t E(t), E = ½‖u‖².
    pub energy_residual: f64,
}

fn dissipation(u: &SpectralField) -> f64 {
    let xi2 = u.grid().xi2();
    let s: f64 = u
        .components()
        .iter()
        .map(|c| c.iter().zip(xi2).map(|(z, l)| l * z.norm_sqr()).sum::<f64>())
        .sum();
    s * u.grid().volume()
}

/// Full nonlinear solution by exponential time differencing (Cox–Matthews ETD-RK2).
pub fn solve_timestepper(
    a: &SpectralField,
    schedule: &ForcingSchedule,
    t_start: f64,
    config: &SolverConfig,
) -> Result<Trajectory> {
    Ok(solve_timestepper_report(a, schedule, t_start, config)?.0)
}

pub fn solve_timestepper_report(
    a: &SpectralField,
    schedule: &ForcingSchedule,
    t_start: f64,
    config: &SolverConfig,
) -> Result<(Trajectory, StepperReport)> {
    config.check_span(t_start, config.horizon)?;
    let grid = a.grid().clone();
    let breaks = restart_times(schedule, t_start, config.horizon);
    let neg_n = |u: &SpectralField| -> Result<SpectralField> { Ok(spectral::nonlinear_self(u)?.scaled(-1.0)) };
    let power = |u: &SpectralField, t: f64| -> Result<f64> {
        match schedule.active(t) {
            Some(_) => schedule.eval(&grid, t)?.inner(u),
            None => Ok(0.0),
        }
    };
    let mut u = spectral::dealias(a);
    let mut traj = Trajectory::new(&grid);
    let mut rep = StepperReport::default();
    let energy = |u: &SpectralField| 0.5 * u.l2_norm().powi(2);
    let e0 = energy(&u);
    let mut budget = 0.0;
    let mut emax = e0;
    let mut rate_prev = power(&u, t_start)? - dissipation(&u);
    traj.push(t_start, u.clone())?;
    rep.max_divergence = spectral::divergence(&u)?.max_abs();
    for w in breaks.windows(2) {
        let (w0, w1) = (w[0], w[1]);
        let (n, h) = nodes(w0, w1, config.dt);
        let prop = Propagator::new(&grid, h);
        let half = Propagator::new(&grid, 0.5 * h);
        for i in 0..n {
            let t = w0 + i as f64 * h;
            let nu = neg_n(&u)?;
            let mut stage = prop.exp_euler(&u, 1.0, &nu)?;
            stage.axpy(1.0, &forcing_increment(schedule, &grid, t, &half, 2)?)?;
            let na = neg_n(&stage)?;
            let corr = prop.apply_phi2(&na.sub(&nu)?);
            stage.axpy(1.0, &corr)?;
            u = stage;
            rep.steps += 1;
            let tn = if i + 1 == n { w1 } else { t + h };
            let l2 = u.l2_norm();
            if !(l2 <= config.blowup) {
                return Err(Error::BlowUp { t: tn, norm: l2 });
            }
            let rate = power(&u, tn)? - dissipation(&u);
            budget += 0.5 * h * (rate + rate_prev);
            rate_prev = rate;
            let e = energy(&u);
            emax = emax.max(e);
            rep.energy_residual = rep.energy_residual.max((e - e0 - budget).abs());
            if keep_sample(i + 1, n, config.sample_stride) {
                rep.max_divergence = rep.max_divergence.max(spectral::divergence(&u)?.max_abs());
                traj.push(tn, u.clone())?;
            }
        }
    }
    if emax > 0.0 {
        rep.energy_residual /= emax;
    }
    Ok((traj, rep))
}

/// Relative L² distance ‖u − v‖/‖v‖ at the last common sample time.
pub fn terminal_relative_error(u: &Trajectory, v: &Trajectory) -> Result<f64> {
    let (tu, fu) = u.last().ok_or(Error::EmptyTrajectory)?;
    let (tv, fv) = v.last().ok_or(Error::EmptyTrajectory)?;
    if (tu - tv).abs() > 1e-9 * tu.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!("trajectories end at {tu} and {tv}")));
    }
    Ok(fu.sub(fv)?.l2_norm() / fv.l2_norm())
}

/// Largest relative L² distance over sample times present in both trajectories.
pub fn max_relative_error(u: &Trajectory, v: &Trajectory) -> Result<f64> {
    let mut best = 0.0f64;
    let mut j = 0;
    for (t, f) in u.iter() {
        while j < v.len() && v.times()[j] < t - 1e-9 {
            j += 1;
        }
        if j < v.len() && (v.times()[j] - t).abs() <= 1e-9 {
            let g = &v.samples()[j];
            let d = g.l2_norm();
            if d > 0.0 {
                best = best.max(f.sub(g)?.l2_norm() / d);
            }
        }
    }
    Ok(best)
}


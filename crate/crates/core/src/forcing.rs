//! Spatial profiles and the external forces built from them.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::lp::{besov_norm, smooth_step, BesovIndex, DyadicPartition};
use crate::spectral;

/// Shape of the Fourier profile ψ̂.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BumpStyle {
    /// exp(−1/(1−|ξ|²/R²)) inside the ball of radius R: positive on the open ball.
    Positive,
    /// 1 on |ξ| ≤ R, decreasing smoothly to 0 at |ξ| = 2R.
    Plateau,
}

/// Unnormalized radial profile.
pub fn bump_shape(style: BumpStyle, rho: f64, radius: f64) -> f64 {
    match style {
        BumpStyle::Positive => {
            let x = rho / radius;
            if x < 1.0 {
                (-1.0 / (1.0 - x * x)).exp()
            } else {
                0.0
            }
        }
        BumpStyle::Plateau => {
            if rho <= radius {
                1.0
            } else {
                smooth_step((2.0 * radius - rho) / radius)
            }
        }
    }
}

fn outer_radius(style: BumpStyle, radius: f64) -> f64 {
    match style {
        BumpStyle::Positive => radius,
        BumpStyle::Plateau => 2.0 * radius,
    }
}

/// Composite Simpson rule on [a, b] with an even number of panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// ∫_{ℝⁿ} ψ̂(ξ) dξ for the radial profile.
fn continuum_mass(style: BumpStyle, radius: f64, dim: usize) -> f64 {
    let top = outer_radius(style, radius);
    match dim {
        2 => 2.0 * PI * simpson(|r| bump_shape(style, r, radius) * r, 0.0, top, 20000),
        _ => 4.0 * PI * simpson(|r| bump_shape(style, r, radius) * r * r, 0.0, top, 20000),
    }
}

/// Scalar profile ψ with compactly supported ψ̂, normalized so that ψ(0) = 1 on ℝⁿ.
#[derive(Clone, Debug)]
pub struct BumpProfile {
    pub field: SpectralField,
    pub fourier_radius: f64,
    pub style: BumpStyle,
}

impl BumpProfile {
    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    /// ψ̂ at frequency magnitude ρ, in the continuum normalization.
    pub fn hat(&self, rho: f64) -> f64 {
        let dim = self.grid().dim();
        let a = (2.0 * PI).powi(dim as i32) / continuum_mass(self.style, self.fourier_radius, dim);
        a * bump_shape(self.style, rho, self.fourier_radius)
    }

    /// The same profile multiplied by `s`.
    pub fn scaled(&self, s: f64) -> BumpProfile {
        BumpProfile { field: self.field.scaled(s), ..self.clone() }
    }
}

/// Default bump: positive style, Fourier radius 1.
pub fn make_bump(grid: &Grid) -> Result<BumpProfile> {
    if grid.nyquist() < 8.0 {
        return Err(Error::Resolution { freq: 8.0, bound: grid.nyquist() });
    }
    make_bump_with(grid, BumpStyle::Positive, 1.0)
}

/// Bump of the given style and radius; the support must sit inside the lattice.
pub fn make_bump_with(grid: &Grid, style: BumpStyle, radius: f64) -> Result<BumpProfile> {
    let top = outer_radius(style, radius);
    if top >= grid.nyquist() {
        return Err(Error::Resolution { freq: top, bound: grid.nyquist() });
    }
    if grid.dxi() >= radius {
        return Err(Error::InvalidArgument(format!(
            "lattice spacing {} does not resolve a Fourier radius {radius}",
            grid.dxi()
        )));
    }
    let dim = grid.dim();
    let a = (2.0 * PI).powi(dim as i32) / continuum_mass(style, radius, dim) / grid.volume();
    let coeffs: Vec<Complex64> = grid
        .xi2()
        .iter()
        .map(|&x2| Complex64::new(a * bump_shape(style, x2.sqrt(), radius), 0.0))
        .collect();
    Ok(BumpProfile {
        field: SpectralField::from_components(grid, vec![coeffs], true)?,
        fourier_radius: radius,
        style,
    })
}

fn require_dim(grid: &Grid, dim: usize) -> Result<()> {
    if grid.dim() != dim {
        return Err(Error::InvalidArgument(format!("expected a {dim}D grid, got {}D", grid.dim())));
    }
    Ok(())
}

/// Ψ = ∂₃ψ e₂ − ∂₂ψ e₃.
pub fn make_psi(bump: &BumpProfile) -> Result<SpectralField> {
    require_dim(bump.grid(), 3)?;
    let d2 = spectral::partial(&bump.field, 1)?;
    let d3 = spectral::partial(&bump.field, 2)?;
    let zero = SpectralField::zeros(bump.grid(), 1);
    SpectralField::stack(&[zero, d3, d2.scaled(-1.0)])
}

/// ∇^⊥ψ in two dimensions.
pub fn make_perp(bump: &BumpProfile) -> Result<SpectralField> {
    require_dim(bump.grid(), 2)?;
    spectral::perp_gradient(&bump.field)
}

/// Θ = ψ cos(M x₁).
pub fn make_theta(bump: &BumpProfile, m: f64) -> Result<SpectralField> {
    spectral::modulate(&bump.field, m, false)
}

/// Φ = ½{∂₂(ψ₃)² − ∂₃(ψ₂ψ₃)} e₂ + ½{−∂₂(ψ₂ψ₃) + ∂₃(ψ₂)²} e₃ with ψ_a = ∂_aψ.
pub fn make_phi(bump: &BumpProfile) -> Result<SpectralField> {
    let grid = bump.grid();
    require_dim(grid, 3)?;
    if 2.0 * bump.fourier_radius >= grid.nyquist() {
        return Err(Error::Resolution { freq: 2.0 * bump.fourier_radius, bound: grid.nyquist() });
    }
    let p2 = spectral::partial(&bump.field, 1)?;
    let p3 = spectral::partial(&bump.field, 2)?;
    let s33 = spectral::multiply(&p3, &p3)?;
    let s23 = spectral::multiply(&p2, &p3)?;
    let s22 = spectral::multiply(&p2, &p2)?;
    let c2 = spectral::partial(&s33, 1)?.sub(&spectral::partial(&s23, 2)?)?.scaled(0.5);
    let c3 = spectral::partial(&s22, 2)?.sub(&spectral::partial(&s23, 1)?)?.scaled(0.5);
    SpectralField::stack(&[SpectralField::zeros(grid, 1), c2, c3])
}

/// χ̃: 0 for τ ≤ h/2, 1 for τ ≥ h.
pub fn chi_tilde(tau: f64, h: f64) -> f64 {
    smooth_step((tau - 0.5 * h) / (0.5 * h))
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_deriv(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    let s = a + b;
    if s == 0.0 {
        return 0.0;
    }
    a * b * (1.0 / (x * x) + 1.0 / ((1.0 - x) * (1.0 - x))) / (s * s)
}

/// Temporal cutoff χ(t) = χ̃(t − t₀) χ̃(t₁ − t).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub t0: f64,
    pub t1: f64,
    pub h: f64,
}

impl Window {
    pub fn new(t0: f64, t1: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::InvalidArgument(format!("ramp width h = {h} must lie in (0, 1]")));
        }
        if !(t1 - t0 >= 2.0 * h) {
            return Err(Error::InvalidArgument(format!(
                "window [{t0}, {t1}] is shorter than two ramps of width {h}"
            )));
        }
        Ok(Window { t0, t1, h })
    }

    pub fn value(&self, t: f64) -> f64 {
        chi_tilde(t - self.t0, self.h) * chi_tilde(self.t1 - t, self.h)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingKind {
    HighDim,
    Lacunary,
    TwoDim,
    NonoscHighDim,
    NonoscLacunary,
}

impl ForcingKind {
    pub fn name(&self) -> &'static str {
        match self {
            ForcingKind::HighDim => "highdim",
            ForcingKind::Lacunary => "lacunary",
            ForcingKind::TwoDim => "twodim",
            ForcingKind::NonoscHighDim => "nonosc_highdim",
            ForcingKind::NonoscLacunary => "nonosc_lacunary",
        }
    }
}

impl fmt::Display for ForcingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ForcingKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "highdim" => ForcingKind::HighDim,
            "lacunary" => ForcingKind::Lacunary,
            "twodim" => ForcingKind::TwoDim,
            "nonosc_highdim" => ForcingKind::NonoscHighDim,
            "nonosc_lacunary" => ForcingKind::NonoscLacunary,
            other => return Err(Error::InvalidArgument(format!("unknown forcing kind `{other}`"))),
        })
    }
}

#[derive(Clone, Debug)]
struct Chirp {
    eta: f64,
    beta0: f64,
    psi2: Vec<f64>,
    psi3: Vec<f64>,
    x1: Vec<f64>,
    initial: SpectralField,
}

impl Chirp {
    fn beta(&self, tau: f64) -> f64 {
        self.beta0 * (1.0 + self.beta0 * tau)
    }

    /// ηΨ(x)·w(β x₁) sampled on the grid, w = cos or sin, scaled pointwise by `mult(x₁)`.
    fn sampled(&self, grid: &Grid, beta: f64, sine: bool, mult: impl Fn(f64) -> f64) -> Result<SpectralField> {
        let n = grid.len();
        let mut c2 = vec![0.0; n];
        let mut c3 = vec![0.0; n];
        for i in 0..n {
            let x = self.x1[i];
            let w = if sine { (beta * x).sin() } else { (beta * x).cos() } * self.eta * mult(x);
            c2[i] = w * self.psi2[i];
            c3[i] = w * self.psi3[i];
        }
        SpectralField::from_physical(grid, &[vec![0.0; n], c2, c3])
    }
}

#[derive(Clone, Debug)]
struct LogLacunary {
    eta: f64,
    eps: f64,
    profiles: Vec<SpectralField>,
}

/// γ(s): 0 for s ≤ 1/3, 1 for s ≥ 2/3 (s ≥ 0 branch of the even window).
pub fn gamma_window(s: f64) -> f64 {
    smooth_step(3.0 * (s.abs() - 1.0 / 3.0))
}

fn gamma_window_deriv(s: f64) -> f64 {
    3.0 * s.signum() * smooth_step_deriv(3.0 * (s.abs() - 1.0 / 3.0))
}

/// log(e^{1/ε²} + t) without overflow.
pub fn log_shifted(eps: f64, t: f64) -> f64 {
    let a = 1.0 / (eps * eps);
    a + (t * (-a).exp()).ln_1p()
}

/// I₁(t) = (1/log(e^{1/ε²}+t)) Σ_{k ≤ ⌊t⌋} γ(t−k)²/(k+1).
pub fn i1_partial_sum(eps: f64, t: f64) -> f64 {
    let kmax = t.floor().max(0.0) as usize;
    let s: f64 = (0..=kmax).map(|k| gamma_window(t - k as f64).powi(2) / (k + 1) as f64).sum();
    s / log_shifted(eps, t)
}

impl LogLacunary {
    fn amp(&self, tau: f64) -> f64 {
        self.eta / log_shifted(self.eps, tau).sqrt()
    }

    fn amp_deriv(&self, tau: f64) -> f64 {
        let a = 1.0 / (self.eps * self.eps);
        let l = log_shifted(self.eps, tau);
        // 1/(e^a + τ) = e^{−a}/(1 + τe^{−a})
        let inv = (-a).exp() / (1.0 + tau * (-a).exp());
        -0.5 * self.eta * l.powf(-1.5) * inv
    }

    fn weights(&self, tau: f64) -> Vec<(usize, f64, f64)> {
        if tau <= 0.0 {
            return Vec::new();
        }
        let kmax = (tau.floor() as usize).min(self.profiles.len() - 1);
        (0..=kmax)
            .map(|k| {
                let s = tau - k as f64;
                let c = 1.0 / ((k + 1) as f64).sqrt();
                (k, c * gamma_window(s), c * gamma_window_deriv(s))
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
enum Profile {
    Separable { g: SpectralField, window: Window },
    Chirp(Box<Chirp>),
    LogLacunary(Box<LogLacunary>),
}

/// One forcing piece, supported in time on [start, stop].
#[derive(Clone, Debug)]
pub struct ForcingSegment {
    pub kind: ForcingKind,
    pub start: f64,
    pub stop: f64,
    /// Construction parameters, echoed in reports.
    pub params: BTreeMap<String, f64>,
    /// Norm certificates measured at construction.
    pub certificates: BTreeMap<String, f64>,
    grid: Grid,
    profile: Profile,
}

impl ForcingSegment {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.stop
    }

    /// Spatial profile g and cutoff χ when f(t) = χ(t)g.
    pub fn separable(&self) -> Option<(&SpectralField, &Window)> {
        match &self.profile {
            Profile::Separable { g, window } => Some((g, window)),
            _ => None,
        }
    }

    /// f(t), zero outside the segment.
    pub fn eval(&self, t: f64) -> Result<SpectralField> {
        let d = self.grid.dim();
        if !self.contains(t) {
            return Ok(SpectralField::zeros(&self.grid, d));
        }
        match &self.profile {
            Profile::Separable { g, window } => Ok(g.scaled(window.value(t))),
            Profile::Chirp(c) => {
                let tau = t - self.start;
                let b = c.beta(tau);
                let b2 = c.beta0 * c.beta0;
                let dt_part = c.sampled(&self.grid, b, true, |x| -b2 * x)?;
                let u = c.sampled(&self.grid, b, false, |_| 1.0)?;
                let mut f = spectral::laplacian(&u).scaled(-1.0);
                f.axpy(1.0, &dt_part)?;
                Ok(f)
            }
            Profile::LogLacunary(l) => {
                let tau = t - self.start;
                let a = l.amp(tau);
                let ad = l.amp_deriv(tau);
                let mut f = SpectralField::zeros(&self.grid, d);
                for (k, w, wd) in l.weights(tau) {
                    let p = &l.profiles[k];
                    f.axpy(ad * w + a * wd, p)?;
                    f.axpy(-a * w, &spectral::laplacian(p))?;
                }
                Ok(f)
            }
        }
    }

    /// Closed-form linear response u^{(1)}(t) (zero data at `start`).
    pub fn closed_form_u1(&self, t: f64) -> Result<Option<SpectralField>> {
        let tau = (t - self.start).max(0.0);
        match &self.profile {
            Profile::Separable { .. } => Ok(None),
            Profile::Chirp(c) => {
                let mut u = c.sampled(&self.grid, c.beta(tau), false, |_| 1.0)?;
                u.axpy(-1.0, &spectral::heat_propagate(&c.initial, tau)?)?;
                Ok(Some(u))
            }
            Profile::LogLacunary(l) => {
                let a = l.amp(tau);
                let mut u = SpectralField::zeros(&self.grid, self.grid.dim());
                for (k, w, _) in l.weights(tau) {
                    u.axpy(a * w, &l.profiles[k])?;
                }
                Ok(Some(u))
            }
        }
    }

    /// Instantaneous carrier frequency of the chirped kind.
    pub fn chirp_beta(&self, t: f64) -> Option<f64> {
        match &self.profile {
            Profile::Chirp(c) => Some(c.beta((t - self.start).max(0.0))),
            _ => None,
        }
    }

    fn param(&self, k: &str) -> f64 {
        self.params.get(k).copied().unwrap_or(f64::NAN)
    }

    /// η of the segment.
    pub fn eta(&self) -> f64 {
        self.param("eta")
    }
}

fn carrier_bound(grid: &Grid) -> f64 {
    grid.dxi() * ((grid.shape()[0] - 1) / 3) as f64
}

fn check_carrier(grid: &Grid, freq: f64, spread: f64) -> Result<()> {
    let bound = carrier_bound(grid);
    if freq + spread > bound + 1e-12 {
        return Err(Error::Resolution { freq: freq + spread, bound });
    }
    for a in 1..grid.dim() {
        let b = grid.dxi() * ((grid.shape()[a] - 1) / 3) as f64;
        if spread > b + 1e-12 {
            return Err(Error::Resolution { freq: spread, bound: b });
        }
    }
    Ok(())
}

fn snap_to_lattice(grid: &Grid, beta: f64) -> f64 {
    (beta / grid.dxi()).round().max(1.0) * grid.dxi()
}

/// Carrier choice for the high-dimensional forcing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Carrier {
    Beta(f64),
    Delta(f64),
}

#[derive(Clone, Debug)]
pub struct HighDimSpec {
    pub carrier: Carrier,
    pub eta: f64,
    pub t0: f64,
    pub t_star: f64,
    pub h: f64,
    pub r: f64,
    pub sigma: f64,
    /// Reject δ > η² instead of flagging it.
    pub strict_delta: bool,
}

fn spatial_cos_forcing(psi: &SpectralField, beta: f64) -> Result<SpectralField> {
    Ok(spectral::laplacian(&spectral::modulate(psi, beta, false)?))
}

/// f_{δ,η}(t) = χ(t)·ηΔ[Ψ cos(βx₁)] with β = δ^{−r/(r−n)}.
pub fn forcing_highdim(bump: &BumpProfile, spec: &HighDimSpec) -> Result<ForcingSegment> {
    let grid = bump.grid().clone();
    require_dim(&grid, 3)?;
    let n = grid.dim() as f64;
    if !(spec.r > n && spec.r < 2.0 * n) {
        return Err(Error::InvalidArgument(format!("r = {} must lie in (n, 2n)", spec.r)));
    }
    let expo = spec.r / (spec.r - n);
    let beta = match spec.carrier {
        Carrier::Beta(b) => b,
        Carrier::Delta(d) => d.powf(-expo),
    };
    let beta = snap_to_lattice(&grid, beta);
    let delta = beta.powf(-1.0 / expo);
    check_carrier(&grid, beta, bump.fourier_radius)?;
    let delta_ok = delta <= spec.eta * spec.eta;
    if spec.strict_delta && !delta_ok {
        return Err(Error::InvalidArgument(format!(
            "δ = {delta:.4} exceeds η² = {:.4}",
            spec.eta * spec.eta
        )));
    }
    let window = Window::new(spec.t0, spec.t0 + spec.t_star, spec.h)?;
    let psi = make_psi(bump)?;
    let g = spatial_cos_forcing(&psi, beta)?.scaled(spec.eta);

    let part = DyadicPartition::for_grid(&grid);
    let mut certificates = BTreeMap::new();
    let low = besov_norm(&g, &part, BesovIndex::new(-2.0, n, 2.0)?)?.value;
    let crit = besov_norm(&g, &part, BesovIndex::new(n / spec.r - 3.0, spec.r, spec.sigma)?)?.value;
    certificates.insert("norm_bm2_n2".into(), low);
    certificates.insert("norm_bm2_n2_over_eta".into(), low / spec.eta);
    certificates.insert("norm_forcing_crit".into(), crit);
    certificates.insert("norm_forcing_crit_over_eta_delta".into(), crit / (spec.eta * delta));
    certificates.insert("delta_regime_ok".into(), delta_ok as u8 as f64);

    let params = BTreeMap::from([
        ("beta".to_string(), beta),
        ("delta".to_string(), delta),
        ("eta".to_string(), spec.eta),
        ("t0".to_string(), spec.t0),
        ("t_star".to_string(), spec.t_star),
        ("h".to_string(), spec.h),
        ("r".to_string(), spec.r),
        ("sigma".to_string(), spec.sigma),
    ]);
    Ok(ForcingSegment {
        kind: ForcingKind::HighDim,
        start: spec.t0,
        stop: spec.t0 + spec.t_star,
        params,
        certificates,
        grid,
        profile: Profile::Separable { g, window },
    })
}

#[derive(Clone, Debug)]
pub struct LacunarySpec {
    pub eta: f64,
    pub t0: f64,
    pub t_star: f64,
    pub h: f64,
    pub k_terms: usize,
    /// Offset in α(k) = 2^{k+k₀}; `None` picks the smallest value keeping blocks j ≤ 2 clean.
    pub k0: Option<i32>,
    pub sigma: f64,
}

/// Surrogate lacunary frequencies α(k) = 2^{k+k₀}, k = 1..K.
pub fn lacunary_frequencies(k_terms: usize, k0: i32) -> Vec<f64> {
    (1..=k_terms as i32).map(|k| 2f64.powi(k + k0)).collect()
}

/// Every interaction frequency α(k)+α(ℓ), |α(k)−α(ℓ)| (k ≠ ℓ) and 2α(k).
pub fn interaction_frequencies(alpha: &[f64]) -> Vec<f64> {
    let mut v = Vec::new();
    for (i, &a) in alpha.iter().enumerate() {
        v.push(2.0 * a);
        for &b in &alpha[i + 1..] {
            v.push(a + b);
            v.push((a - b).abs());
        }
    }
    v
}

/// J₁ = (1/log N) Σ_{k=1}^{K} 1/k with N = K + 1.
pub fn lacunary_j1(k_terms: usize) -> f64 {
    let h: f64 = (1..=k_terms).map(|k| 1.0 / k as f64).sum();
    h / ((k_terms + 1) as f64).ln()
}

/// g = (η/√log N) Δ(Ψ Σ_k k^{−1/2} cos(α(k)x₁)), times χ(t).
pub fn forcing_lacunary(bump: &BumpProfile, spec: &LacunarySpec) -> Result<ForcingSegment> {
    let grid = bump.grid().clone();
    require_dim(&grid, 3)?;
    if spec.k_terms == 0 {
        return Err(Error::InvalidArgument("lacunary forcing needs K ≥ 1".into()));
    }
    let spread = 2.0 * bump.fourier_radius;
    let k0 = match spec.k0 {
        Some(k) => k,
        None => {
            let mut k = 1;
            while 2f64.powi(1 + k) < 8.0 + spread {
                k += 1;
            }
            k
        }
    };
    let alpha = lacunary_frequencies(spec.k_terms, k0);
    let inter = interaction_frequencies(&alpha);
    let min_inter = inter.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_inter > 4.0) {
        return Err(Error::InvalidArgument(format!(
            "interaction frequency {min_inter} does not exceed 4"
        )));
    }
    for &a in &alpha {
        if ((a / grid.dxi()).round() - a / grid.dxi()).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("frequency {a} is off the lattice")));
        }
    }
    check_carrier(&grid, *alpha.last().unwrap(), bump.fourier_radius)?;

    let n_log = ((spec.k_terms + 1) as f64).ln();
    let psi = make_psi(bump)?;
    let mut sum = SpectralField::zeros(&grid, 3);
    for (k, &a) in alpha.iter().enumerate() {
        sum.axpy(1.0 / ((k + 1) as f64).sqrt(), &spectral::modulate(&psi, a, false)?)?;
    }
    let g = spectral::laplacian(&sum).scaled(spec.eta / n_log.sqrt());
    let window = Window::new(spec.t0, spec.t0 + spec.t_star, spec.h)?;

    let part = DyadicPartition::for_grid(&grid);
    let measured = besov_norm(&g, &part, BesovIndex::new(-2.0, 3.0, spec.sigma)?)?.value;
    let series: f64 = (1..=spec.k_terms)
        .map(|k| (k as f64).powf(-spec.sigma / 2.0))
        .sum::<f64>()
        .powf(1.0 / spec.sigma);
    let mut certificates = BTreeMap::new();
    certificates.insert("j1".into(), lacunary_j1(spec.k_terms));
    certificates.insert("norm_bm2_n_sigma".into(), measured);
    certificates.insert("series_scale".into(), spec.eta / n_log.sqrt() * series);
    certificates.insert("min_interaction".into(), min_inter);
    certificates.insert("low_blocks_clean".into(), (min_inter - spread >= 8.0) as u8 as f64);
    let mut params = BTreeMap::from([
        ("eta".to_string(), spec.eta),
        ("t0".to_string(), spec.t0),
        ("t_star".to_string(), spec.t_star),
        ("h".to_string(), spec.h),
        ("k_terms".to_string(), spec.k_terms as f64),
        ("k0".to_string(), k0 as f64),
        ("sigma".to_string(), spec.sigma),
    ]);
    for (k, a) in alpha.iter().enumerate() {
        params.insert(format!("alpha_{}", k + 1), *a);
    }
    Ok(ForcingSegment {
        kind: ForcingKind::Lacunary,
        start: spec.t0,
        stop: spec.t0 + spec.t_star,
        params,
        certificates,
        grid,
        profile: Profile::Separable { g, window },
    })
}

#[derive(Clone, Debug)]
pub struct TwoDimSpec {
    /// N ≥ 3; the window lasts 2^{2N}.
    pub n_scale: u32,
    pub m: f64,
    pub eta: f64,
    pub t0: f64,
}

/// f_N = (η/√N) χ(t) Δ∇^⊥(ψ cos(Mx₁)) on [t₀, t₀ + 2^{2N}].
pub fn forcing_2d(bump: &BumpProfile, spec: &TwoDimSpec) -> Result<ForcingSegment> {
    let grid = bump.grid().clone();
    require_dim(&grid, 2)?;
    if spec.n_scale < 3 {
        return Err(Error::InvalidArgument(format!("N = {} must be at least 3", spec.n_scale)));
    }
    if spec.m < 10.0 {
        return Err(Error::InvalidArgument(format!("M = {} must be at least 10", spec.m)));
    }
    let top = outer_radius(bump.style, bump.fourier_radius);
    check_carrier(&grid, spec.m, top)?;
    let theta = make_theta(bump, spec.m)?;
    let g = spectral::laplacian(&spectral::perp_gradient(&theta)?);
    let nf = spec.n_scale as f64;
    let g = g.scaled(spec.eta / nf.sqrt());
    let dur = 2f64.powi(2 * spec.n_scale as i32);
    let window = Window::new(spec.t0, spec.t0 + dur, 1.0)?;
    let part = DyadicPartition::for_grid(&grid);
    let norm = besov_norm(&g, &part, BesovIndex::new(-1.0, 1.0, 1.0)?)?.value;
    let mut certificates = BTreeMap::new();
    certificates.insert("norm_bm1_11".into(), norm);
    certificates.insert("norm_bm1_11_over_m2_eta_rootn".into(), norm / (spec.m * spec.m * spec.eta / nf.sqrt()));
    let params = BTreeMap::from([
        ("n_scale".to_string(), nf),
        ("m".to_string(), spec.m),
        ("eta".to_string(), spec.eta),
        ("t0".to_string(), spec.t0),
        ("t_star".to_string(), dur),
        ("h".to_string(), 1.0),
    ]);
    Ok(ForcingSegment {
        kind: ForcingKind::TwoDim,
        start: spec.t0,
        stop: spec.t0 + dur,
        params,
        certificates,
        grid,
        profile: Profile::Separable { g, window },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonoscVariant {
    /// p > n: chirped carrier.
    HighDim,
    /// p = n: switched-on lacunary carriers.
    Lacunary,
}

#[derive(Clone, Debug)]
pub struct NonoscSpec {
    pub variant: NonoscVariant,
    pub eps: f64,
    pub eta: f64,
    pub p: f64,
    pub t0: f64,
    pub horizon: f64,
    /// α(k) = 2^{k+k₀} for the p = n variant.
    pub k0: i32,
}

/// Forces f = ∂_t u^{(1)} − Δu^{(1)} for the explicit non-oscillating u^{(1)}.
pub fn forcing_nonosc(bump: &BumpProfile, spec: &NonoscSpec) -> Result<ForcingSegment> {
    let grid = bump.grid().clone();
    require_dim(&grid, 3)?;
    let n = grid.dim() as f64;
    let psi = make_psi(bump)?;
    let mut params = BTreeMap::from([
        ("eps".to_string(), spec.eps),
        ("eta".to_string(), spec.eta),
        ("p".to_string(), spec.p),
        ("t0".to_string(), spec.t0),
        ("horizon".to_string(), spec.horizon),
    ]);
    let mut certificates = BTreeMap::new();
    let profile = match spec.variant {
        NonoscVariant::HighDim => {
            if !(spec.p > n) {
                return Err(Error::InvalidArgument(format!("p = {} must exceed n = {n}", spec.p)));
            }
            let alpha = 1.0 / (1.0 - n / spec.p);
            let beta0 = spec.eps.powf(-alpha);
            let beta_end = beta0 * (1.0 + beta0 * spec.horizon);
            if beta_end + bump.fourier_radius > carrier_bound(&grid) {
                return Err(Error::Resolution { freq: beta_end + bump.fourier_radius, bound: carrier_bound(&grid) });
            }
            check_carrier(&grid, 0.0, bump.fourier_radius)?;
            let phys = psi.to_physical();
            let x1: Vec<f64> = (0..grid.len()).map(|i| grid.x_centered(0, grid.unflatten(i)[0])).collect();
            // x₁ is a sawtooth on the torus; the jump at the wrap is harmless only where Ψ is small.
            let wrap = grid.shape()[0] / 2;
            let (mut peak, mut edge) = (0.0f64, 0.0f64);
            for i in 0..grid.len() {
                let v = phys[1][i].abs().max(phys[2][i].abs());
                peak = peak.max(v);
                if grid.unflatten(i)[0] == wrap {
                    edge = edge.max(v);
                }
            }
            certificates.insert("edge_ratio".into(), edge / peak);
            let mut chirp = Chirp {
                eta: spec.eta,
                beta0,
                psi2: phys[1].clone(),
                psi3: phys[2].clone(),
                x1,
                initial: SpectralField::zeros(&grid, 3),
            };
            chirp.initial = chirp.sampled(&grid, beta0, false, |_| 1.0)?;
            params.insert("beta0".into(), beta0);
            params.insert("alpha".into(), alpha);
            Profile::Chirp(Box::new(chirp))
        }
        NonoscVariant::Lacunary => {
            if (spec.p - n).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("the lacunary variant needs p = n, got {}", spec.p)));
            }
            let count = spec.horizon.floor() as usize + 1;
            let alphas: Vec<f64> = (0..count as i32).map(|k| 2f64.powi(k + spec.k0)).collect();
            check_carrier(&grid, *alphas.last().unwrap(), bump.fourier_radius)?;
            let profiles = alphas
                .iter()
                .map(|&a| Ok(spectral::modulate(&psi, a, false)?))
                .collect::<Result<Vec<_>>>()?;
            for (k, a) in alphas.iter().enumerate() {
                params.insert(format!("alpha_{k}"), *a);
            }
            params.insert("k0".into(), spec.k0 as f64);
            Profile::LogLacunary(Box::new(LogLacunary { eta: spec.eta, eps: spec.eps, profiles }))
        }
    };
    Ok(ForcingSegment {
        kind: match spec.variant {
            NonoscVariant::HighDim => ForcingKind::NonoscHighDim,
            NonoscVariant::Lacunary => ForcingKind::NonoscLacunary,
        },
        start: spec.t0,
        stop: spec.t0 + spec.horizon,
        params,
        certificates,
        grid,
        profile,
    })
}

/// Ordered, disjoint forcing segments; zero between them.
#[derive(Clone, Debug, Default)]
pub struct ForcingSchedule {
    segments: Vec<ForcingSegment>,
}

/// Validates ordering and disjointness.
pub fn schedule_forcing(segments: Vec<ForcingSegment>) -> Result<ForcingSchedule> {
    for w in segments.windows(2) {
        if w[1].start < w[0].stop {
            return Err(Error::Overlap(w[1].start));
        }
        w[0].grid.check_same(&w[1].grid)?;
    }
    Ok(ForcingSchedule { segments })
}

impl ForcingSchedule {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn segments(&self) -> &[ForcingSegment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Segment whose closed support contains t.
    pub fn active(&self, t: f64) -> Option<&ForcingSegment> {
        self.segments.iter().find(|s| s.contains(t))
    }

    /// f(t) on `grid`, zero between segments.
    pub fn eval(&self, grid: &Grid, t: f64) -> Result<SpectralField> {
        match self.active(t) {
            Some(s) => {
                grid.check_same(s.grid())?;
                s.eval(t)
            }
            None => Ok(SpectralField::zeros(grid, grid.dim())),
        }
    }

    /// sup over t of the Besov norm on each segment; separable segments use max χ = 1.
    pub fn window_sup_norms(&self, part: &DyadicPartition, index: BesovIndex, samples: usize) -> Result<Vec<f64>> {
        self.segments
            .iter()
            .map(|s| match s.separable() {
                Some((g, _)) => Ok(besov_norm(g, part, index)?.value),
                None => {
                    let mut best = 0.0f64;
                    for i in 0..=samples {
                        let t = s.start + (s.stop - s.start) * i as f64 / samples as f64;
                        best = best.max(besov_norm(&s.eval(t)?, part, index)?.value);
                    }
                    Ok(best)
                }
            })
            .collect()
    }
}

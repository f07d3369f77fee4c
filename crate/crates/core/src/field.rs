//! Fourier-coefficient fields and time-sampled trajectories.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::Grid;

/// Scalar or vector field stored as Fourier coefficients, one array per component.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    comps: Vec<Vec<Complex64>>,
    is_real: bool,
}

impl SpectralField {
    pub fn zeros(grid: &Grid, ncomp: usize) -> Self {
        SpectralField {
            grid: grid.clone(),
            comps: (0..ncomp).map(|_| grid.zeros()).collect(),
            is_real: true,
        }
    }

    pub fn from_components(grid: &Grid, comps: Vec<Vec<Complex64>>, is_real: bool) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::InvalidArgument("field needs at least one component".into()));
        }
        if let Some(c) = comps.iter().find(|c| c.len() != grid.len()) {
            return Err(Error::InvalidArgument(format!(
                "component has {} coefficients, grid has {}",
                c.len(),
                grid.len()
            )));
        }
        Ok(SpectralField { grid: grid.clone(), comps, is_real })
    }

    /// Transforms real samples (one array per component) to coefficients.
    pub fn from_physical(grid: &Grid, values: &[Vec<f64>]) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| v.len() != grid.len()) {
            return Err(Error::InvalidArgument(format!(
                "component has {} samples, grid has {}",
                v.len(),
                grid.len()
            )));
        }
        let mut comps = Vec::with_capacity(values.len());
        let mut it = values.chunks(2);
        for pair in &mut it {
            if pair.len() == 2 {
                let (a, b) = fft::forward_real_pair(grid, &pair[0], &pair[1]);
                comps.push(a);
                comps.push(b);
            } else {
                let (a, _) = fft::forward_real_pair(grid, &pair[0], &vec![0.0; grid.len()]);
                comps.push(a);
            }
        }
        Self::from_components(grid, comps, true)
    }

    /// Samples a real function of position x ∈ [0, L)^n.
    pub fn from_fn<F>(grid: &Grid, ncomp: usize, f: F) -> Result<Self>
    where
        F: Fn([f64; 3]) -> Vec<f64>,
    {
        let mut values = vec![vec![0.0; grid.len()]; ncomp];
        let s = grid.shape3();
        let xs: [Vec<f64>; 3] = std::array::from_fn(|a| (0..s[a]).map(|i| grid.x(a, i)).collect());
        let mut idx = 0;
        for i0 in 0..s[0] {
            for i1 in 0..s[1] {
                for i2 in 0..s[2] {
                    let v = f([xs[0][i0], xs[1][i1], xs[2][i2]]);
                    for (c, val) in v.into_iter().enumerate().take(ncomp) {
                        values[c][idx] = val;
                    }
                    idx += 1;
                }
            }
        }
        Self::from_physical(grid, &values)
    }

    /// Real samples of every component (imaginary round-off discarded).
    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.comps.len());
        for pair in self.comps.chunks(2) {
            if pair.len() == 2 {
                let (a, b) = fft::inverse_real_pair(&self.grid, &pair[0], &pair[1]);
                out.push(a);
                out.push(b);
            } else {
                out.push(fft::inverse_real(&self.grid, &pair[0]));
            }
        }
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.comps
    }

    /// Coefficient of component `c` at integer wavenumber `k`, zero off the lattice.
    pub fn coefficient(&self, c: usize, k: [i64; 3]) -> Complex64 {
        self.grid
            .index_of(k)
            .map(|i| self.comps[c][i])
            .unwrap_or_default()
    }

    /// Sets the ±k pair of a real field so that it stays Hermitian.
    pub fn set_real_mode(&mut self, c: usize, k: [i64; 3], value: Complex64) -> Result<()> {
        let i = self
            .grid
            .index_of(k)
            .ok_or_else(|| Error::InvalidArgument(format!("wavenumber {k:?} not on the lattice")))?;
        let j = self.grid.neg_index(i);
        self.comps[c][i] = value;
        self.comps[c][j] = if i == j { Complex64::new(value.re, 0.0) } else { value.conj() };
        Ok(())
    }

    /// Largest |ĉ(−k) − conj ĉ(k)| relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for comp in &self.comps {
            for (i, c) in comp.iter().enumerate() {
                scale = scale.max(c.norm());
                let j = self.grid.neg_index(i);
                worst = worst.max((comp[j] - c.conj()).norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    fn check(&self, other: &SpectralField) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.ncomp() != other.ncomp() {
            return Err(Error::ComponentMismatch { expected: self.ncomp(), found: other.ncomp() });
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn scale(&mut self, s: f64) {
        for comp in &mut self.comps {
            for c in comp.iter_mut() {
                *c *= s;
            }
        }
    }

    /// self += a·other
    pub fn axpy(&mut self, a: f64, other: &SpectralField) -> Result<()> {
        self.check(other)?;
        for (x, y) in self.comps.iter_mut().zip(&other.comps) {
            for (u, v) in x.iter_mut().zip(y) {
                *u += v * a;
            }
        }
        self.is_real &= other.is_real;
        Ok(())
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Applies a real multiplier depending on the flat index to every component.
    pub fn map_symbol<F: Fn(usize) -> f64>(&self, m: F) -> SpectralField {
        let mut out = self.clone();
        for comp in &mut out.comps {
            for (i, c) in comp.iter_mut().enumerate() {
                *c *= m(i);
            }
        }
        out
    }

    /// L² norm over the box via Parseval, Euclidean over components.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.comps.iter().flat_map(|c| c.iter()).map(|c| c.norm_sqr()).sum();
        (s * self.grid.volume()).sqrt()
    }

    /// ∫ u·v over the box.
    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        self.check(other)?;
        let s: f64 = self
            .comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(x, y)| (x * y.conj()).re)
            .sum();
        Ok(s * self.grid.volume())
    }

    /// Pointwise sup of the Euclidean magnitude.
    pub fn max_abs(&self) -> f64 {
        pointwise_magnitude(&self.to_physical()).into_iter().fold(0.0, f64::max)
    }

    /// Component-wise copy of a single component as a scalar field.
    pub fn scalar(&self, c: usize) -> SpectralField {
        SpectralField { grid: self.grid.clone(), comps: vec![self.comps[c].clone()], is_real: self.is_real }
    }

    /// Stacks scalar fields into a vector field.
    pub fn stack(parts: &[SpectralField]) -> Result<SpectralField> {
        let grid = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to stack".into()))?
            .grid
            .clone();
        let mut comps = Vec::new();
        let mut real = true;
        for p in parts {
            grid.check_same(&p.grid)?;
            real &= p.is_real;
            comps.extend(p.comps.iter().cloned());
        }
        Self::from_components(&grid, comps, real)
    }

    /// Largest coefficient modulus over all components.
    pub fn max_coefficient(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter()).map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// |v(x)| = sqrt(Σ_c v_c(x)²) at every grid point.
pub fn pointwise_magnitude(values: &[Vec<f64>]) -> Vec<f64> {
    if values.len() == 1 {
        return values[0].iter().map(|v| v.abs()).collect();
    }
    let n = values[0].len();
    (0..n)
        .map(|i| values.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .collect()
}

/// Time-sampled fields on a common grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: Grid,
    times: Vec<f64>,
    samples: Vec<SpectralField>,
}

impl Trajectory {
    pub fn new(grid: &Grid) -> Self {
        Trajectory { grid: grid.clone(), times: Vec::new(), samples: Vec::new() }
    }

    pub fn push(&mut self, t: f64, field: SpectralField) -> Result<()> {
        self.grid.check_same(field.grid())?;
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::InvalidArgument(format!(
                    "sample time {t} does not follow {last}"
                )));
            }
        }
        self.times.push(t);
        self.samples.push(field);
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn samples(&self) -> &[SpectralField] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &SpectralField)> {
        self.times.last().map(|&t| (t, self.samples.last().unwrap()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &SpectralField)> {
        self.times.iter().copied().zip(self.samples.iter())
    }

    /// Appends another trajectory, dropping its first sample when it repeats our last time.
    pub fn extend(&mut self, other: Trajectory) -> Result<()> {
        for (t, f) in other.times.into_iter().zip(other.samples) {
            if self.times.last().is_some_and(|&l| t <= l) {
                continue;
            }
            self.push(t, f)?;
        }
        Ok(())
    }

    /// Restriction to samples with t in [a, b].
    pub fn window(&self, a: f64, b: f64) -> Trajectory {
        let mut out = Trajectory::new(&self.grid);
        for (t, f) in self.iter() {
            if t >= a && t <= b {
                out.times.push(t);
                out.samples.push(f.clone());
            }
        }
        out
    }
}

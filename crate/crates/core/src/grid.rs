//! Periodic lattice on the box [0, L)^n.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Frequency lattice of a periodic box, shared cheaply between fields.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    shape: [usize; 3],
    length: f64,
    kint: [Vec<i64>; 3],
    xi2: Vec<f64>,
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

fn smooth_size(n: usize) -> bool {
    if n < 16 {
        return false;
    }
    let mut m = n;
    while m % 2 == 0 {
        m /= 2;
    }
    while m % 3 == 0 {
        m /= 3;
    }
    m == 1
}

impl Grid {
    /// Isotropic grid with `points` samples per axis.
    pub fn new(dim: usize, points: usize, length: f64) -> Result<Self> {
        Self::with_shape(dim, &vec![points; dim], length)
    }

    /// Grid with per-axis point counts on the cube [0, L)^dim.
    pub fn with_shape(dim: usize, points: &[usize], length: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{2, 3}}")));
        }
        if points.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} axis sizes, got {}",
                points.len()
            )));
        }
        if let Some(&bad) = points.iter().find(|&&n| !smooth_size(n)) {
            return Err(Error::InvalidGrid(format!(
                "{bad} points per axis: need at least 16 and a product of powers of 2 and 3"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("domain length {length} must be positive")));
        }
        let mut shape = [1usize; 3];
        shape[..dim].copy_from_slice(points);

        let kint: [Vec<i64>; 3] = std::array::from_fn(|a| {
            let n = shape[a] as i64;
            (0..n).map(|i| if i < (n + 1) / 2 { i } else { i - n }).collect()
        });
        // shape 1 axes give the single index 0
        let q = 2.0 * PI / length;
        let mut xi2 = Vec::with_capacity(shape.iter().product());
        for &k0 in &kint[0] {
            let a = (q * k0 as f64).powi(2);
            for &k1 in &kint[1] {
                let b = a + (q * k1 as f64).powi(2);
                for &k2 in &kint[2] {
                    xi2.push(b + (q * k2 as f64).powi(2));
                }
            }
        }

        let mut planner = FftPlanner::new();
        let forward = std::array::from_fn(|a| planner.plan_fft_forward(shape[a]));
        let inverse = std::array::from_fn(|a| planner.plan_fft_inverse(shape[a]));

        Ok(Grid {
            inner: Arc::new(GridInner {
                dim,
                shape,
                length,
                kint,
                xi2,
                forward,
                inverse,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Point counts for the first `dim` axes.
    pub fn shape(&self) -> &[usize] {
        &self.inner.shape[..self.inner.dim]
    }

    pub(crate) fn shape3(&self) -> [usize; 3] {
        self.inner.shape
    }

    /// Total number of lattice points.
    pub fn len(&self) -> usize {
        self.inner.xi2.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    /// Lattice spacing in frequency, 2π/L.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.inner.length
    }

    /// Largest frequency resolved along every axis, π·n_min/L.
    pub fn nyquist(&self) -> f64 {
        let nmin = *self.shape().iter().min().unwrap();
        PI * nmin as f64 / self.inner.length
    }

    /// Nyquist frequency of one axis.
    pub fn axis_nyquist(&self, axis: usize) -> f64 {
        PI * self.inner.shape[axis] as f64 / self.inner.length
    }

    /// Largest |ξ| on the lattice.
    pub fn max_xi(&self) -> f64 {
        self.shape()
            .iter()
            .map(|&n| (PI * n as f64 / self.inner.length).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Physical cell volume (L/n_0)···(L/n_{d-1}).
    pub fn cell_volume(&self) -> f64 {
        self.shape()
            .iter()
            .map(|&n| self.inner.length / n as f64)
            .product()
    }

    /// Volume L^n of the box.
    pub fn volume(&self) -> f64 {
        self.inner.length.powi(self.inner.dim as i32)
    }

    /// Integer wavenumber of index `i` along `axis`.
    pub fn k(&self, axis: usize, i: usize) -> i64 {
        self.inner.kint[axis][i]
    }

    pub fn wavenumbers(&self, axis: usize) -> &[i64] {
        &self.inner.kint[axis]
    }

    /// Frequency 2πk/L along an axis.
    pub fn xi(&self, axis: usize, i: usize) -> f64 {
        self.dxi() * self.inner.kint[axis][i] as f64
    }

    /// Frequency used by first-order derivatives: zero at the unpaired Nyquist index.
    pub fn xi_deriv(&self, axis: usize, i: usize) -> f64 {
        let n = self.inner.shape[axis];
        if n % 2 == 0 && i == n / 2 {
            0.0
        } else {
            self.xi(axis, i)
        }
    }

    /// |ξ|² per flat index.
    pub fn xi2(&self) -> &[f64] {
        &self.inner.xi2
    }

    /// Splits a flat index into per-axis indices.
    pub fn unflatten(&self, idx: usize) -> [usize; 3] {
        let [_, n1, n2] = self.inner.shape;
        [idx / (n1 * n2), (idx / n2) % n1, idx % n2]
    }

    pub fn flatten(&self, ix: [usize; 3]) -> usize {
        let [_, n1, n2] = self.inner.shape;
        (ix[0] * n1 + ix[1]) * n2 + ix[2]
    }

    /// Flat index of the frequency −k.
    pub fn neg_index(&self, idx: usize) -> usize {
        let ix = self.unflatten(idx);
        let s = self.inner.shape;
        self.flatten(std::array::from_fn(|a| (s[a] - ix[a]) % s[a]))
    }

    /// Flat index holding integer wavenumber `k` (per axis), if on the lattice.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let s = self.inner.shape;
        let mut ix = [0usize; 3];
        for a in 0..3 {
            let n = s[a] as i64;
            if a >= self.inner.dim {
                if k[a] != 0 {
                    return None;
                }
                continue;
            }
            ix[a] = k[a].rem_euclid(n) as usize;
            if self.inner.kint[a][ix[a]] != k[a] {
                return None;
            }
        }
        Some(self.flatten(ix))
    }

    /// Whether a mode survives the 2/3 truncation (3|k_a| < n_a on every axis).
    pub fn in_dealias_box(&self, idx: usize) -> bool {
        let ix = self.unflatten(idx);
        (0..self.inner.dim).all(|a| 3 * self.inner.kint[a][ix[a]].unsigned_abs() < self.inner.shape[a] as u64)
    }

    /// Largest frequency kept by the 2/3 rule along every axis.
    pub fn dealias_cutoff(&self) -> f64 {
        self.shape()
            .iter()
            .map(|&n| self.dxi() * ((n - 1) / 3) as f64)
            .fold(f64::INFINITY, f64::min)
    }

    /// Physical coordinate of index `i` along `axis`, in [0, L).
    pub fn x(&self, axis: usize, i: usize) -> f64 {
        self.inner.length * i as f64 / self.inner.shape[axis] as f64
    }

    /// Physical coordinate folded into [−L/2, L/2).
    pub fn x_centered(&self, axis: usize, i: usize) -> f64 {
        let n = self.inner.shape[axis];
        let j = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
        self.inner.length * j / n as f64
    }

    pub(crate) fn plan(&self, axis: usize, inverse: bool) -> &Arc<dyn Fft<f64>> {
        if inverse {
            &self.inner.inverse[axis]
        } else {
            &self.inner.forward[axis]
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.shape == other.inner.shape
                && self.inner.length.to_bits() == other.inner.length.to_bits())
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub(crate) fn zeros(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.len()]
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("shape", &self.shape())
            .field("length", &self.inner.length)
            .finish()
    }
}

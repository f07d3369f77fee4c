//! Exact-symbol operators: heat semigroup, Leray projection, derivatives, products.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::SpectralField;
use crate::grid::Grid;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// e^{tΔ}: multiplies the coefficient at ξ by e^{−|ξ|²t}.
pub fn heat_propagate(field: &SpectralField, t: f64) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("heat time {t} must be nonnegative")));
    }
    let xi2 = field.grid().xi2();
    Ok(field.map_symbol(|i| (-xi2[i] * t).exp()))
}

/// (−Δ)^{-1} with the zero mode set to zero.
pub fn inverse_laplacian(field: &SpectralField) -> SpectralField {
    let xi2 = field.grid().xi2();
    field.map_symbol(|i| if xi2[i] > 0.0 { 1.0 / xi2[i] } else { 0.0 })
}

pub fn laplacian(field: &SpectralField) -> SpectralField {
    let xi2 = field.grid().xi2();
    field.map_symbol(|i| -xi2[i])
}

fn deriv_table(grid: &Grid) -> [Vec<f64>; 3] {
    let s = grid.shape3();
    std::array::from_fn(|a| {
        if a < grid.dim() {
            (0..s[a]).map(|i| grid.xi_deriv(a, i)).collect()
        } else {
            vec![0.0]
        }
    })
}

/// Calls `f(flat_index, [ξ₀, ξ₁, ξ₂])` with derivative wavenumbers.
fn for_each_xi<F: FnMut(usize, [f64; 3])>(grid: &Grid, mut f: F) {
    let d = deriv_table(grid);
    let s = grid.shape3();
    let mut idx = 0;
    for i0 in 0..s[0] {
        for i1 in 0..s[1] {
            for i2 in 0..s[2] {
                f(idx, [d[0][i0], d[1][i1], d[2][i2]]);
                idx += 1;
            }
        }
    }
}

/// ∂/∂x_axis applied to every component.
pub fn partial(field: &SpectralField, axis: usize) -> Result<SpectralField> {
    if axis >= field.grid().dim() {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
    }
    let mut out = field.clone();
    let grid = field.grid().clone();
    for c in 0..out.ncomp() {
        let comp = out.component_mut(c);
        for_each_xi(&grid, |i, xi| comp[i] *= I * xi[axis]);
    }
    Ok(out)
}

fn require_vector(field: &SpectralField) -> Result<()> {
    if field.ncomp() != field.grid().dim() {
        return Err(Error::ComponentMismatch { expected: field.grid().dim(), found: field.ncomp() });
    }
    Ok(())
}

fn require_scalar(field: &SpectralField) -> Result<()> {
    if field.ncomp() != 1 {
        return Err(Error::ComponentMismatch { expected: 1, found: field.ncomp() });
    }
    Ok(())
}

/// div u = Σ_a ∂_a u_a.
pub fn divergence(field: &SpectralField) -> Result<SpectralField> {
    require_vector(field)?;
    let grid = field.grid().clone();
    let mut out = grid.zeros();
    let dim = grid.dim();
    for_each_xi(&grid, |i, xi| {
        let mut s = Complex64::new(0.0, 0.0);
        for a in 0..dim {
            s += field.component(a)[i] * xi[a];
        }
        out[i] = I * s;
    });
    SpectralField::from_components(&grid, vec![out], field.is_real())
}

/// ∇q of a scalar field.
pub fn gradient(field: &SpectralField) -> Result<SpectralField> {
    require_scalar(field)?;
    let grid = field.grid().clone();
    let dim = grid.dim();
    let mut comps = vec![grid.zeros(); dim];
    let q = field.component(0);
    for_each_xi(&grid, |i, xi| {
        for a in 0..dim {
            comps[a][i] = I * xi[a] * q[i];
        }
    });
    SpectralField::from_components(&grid, comps, field.is_real())
}

/// ∇^⊥ψ = (−∂₂ψ, ∂₁ψ) in two dimensions.
pub fn perp_gradient(field: &SpectralField) -> Result<SpectralField> {
    require_scalar(field)?;
    if field.grid().dim() != 2 {
        return Err(Error::InvalidArgument("perp gradient needs a 2D grid".into()));
    }
    let g = gradient(field)?;
    let mut comps = g.into_components();
    comps.swap(0, 1);
    for c in comps[0].iter_mut() {
        *c = -*c;
    }
    SpectralField::from_components(field.grid(), comps, field.is_real())
}

/// ℙ = I − ξξᵀ/|ξ|², zero mode removed.
pub fn leray_project(field: &SpectralField) -> Result<SpectralField> {
    require_vector(field)?;
    let grid = field.grid().clone();
    let dim = grid.dim();
    let mut comps: Vec<Vec<Complex64>> = field.components().to_vec();
    for_each_xi(&grid, |i, xi| {
        let k2: f64 = xi[..dim].iter().map(|x| x * x).sum();
        if i == 0 {
            for c in comps.iter_mut() {
                c[i] = Complex64::new(0.0, 0.0);
            }
            return;
        }
        if k2 == 0.0 {
            return;
        }
        let mut dot = Complex64::new(0.0, 0.0);
        for a in 0..dim {
            dot += comps[a][i] * xi[a];
        }
        dot /= k2;
        for a in 0..dim {
            comps[a][i] -= dot * xi[a];
        }
    });
    SpectralField::from_components(&grid, comps, field.is_real())
}

/// Zeroes every mode outside the 2/3-rule box.
pub fn dealias(field: &SpectralField) -> SpectralField {
    let mut out = field.clone();
    let mask = dealias_mask(field.grid());
    for c in 0..out.ncomp() {
        for (v, &keep) in out.component_mut(c).iter_mut().zip(&mask) {
            if !keep {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }
    out
}

pub(crate) fn dealias_mask(grid: &Grid) -> Vec<bool> {
    (0..grid.len()).map(|i| grid.in_dealias_box(i)).collect()
}

/// Multiplication by cos(βx₁) or sin(βx₁) as an exact lattice shift along axis 0.
pub fn modulate(field: &SpectralField, beta: f64, sine: bool) -> Result<SpectralField> {
    let grid = field.grid().clone();
    let mf = beta / grid.dxi();
    let m = mf.round();
    if (mf - m).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "carrier {beta} is not a multiple of the lattice spacing {}",
            grid.dxi()
        )));
    }
    let m = m as i64;
    let s = grid.shape3();
    let n0 = s[0] as i64;
    let lo = *grid.wavenumbers(0).iter().min().unwrap();
    let hi = *grid.wavenumbers(0).iter().max().unwrap();
    let plane = s[1] * s[2];
    let scale = field.max_coefficient();
    let (wp, wm) = if sine {
        // sin θ = (e^{iθ} − e^{−iθ}) / 2i
        (Complex64::new(0.0, -0.5), Complex64::new(0.0, 0.5))
    } else {
        (Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0))
    };
    let mut comps = Vec::with_capacity(field.ncomp());
    for c in 0..field.ncomp() {
        let src = field.component(c);
        let mut dst = grid.zeros();
        for i0 in 0..s[0] {
            let k0 = grid.k(0, i0);
            for (shift, w) in [(m, wp), (-m, wm)] {
                let k = k0 + shift;
                let row = &src[i0 * plane..(i0 + 1) * plane];
                if k < lo || k > hi {
                    if row.iter().any(|v| v.norm() > 1e-14 * scale) {
                        return Err(Error::Resolution {
                            freq: (k.abs() as f64) * grid.dxi(),
                            bound: grid.axis_nyquist(0),
                        });
                    }
                    continue;
                }
                let j0 = k.rem_euclid(n0) as usize;
                let out = &mut dst[j0 * plane..(j0 + 1) * plane];
                for (o, v) in out.iter_mut().zip(row) {
                    *o += w * v;
                }
            }
        }
        comps.push(dst);
    }
    SpectralField::from_components(&grid, comps, field.is_real())
}

/// Pointwise product of two scalar fields, without truncation.
pub fn multiply(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    require_scalar(f)?;
    require_scalar(g)?;
    f.grid().check_same(g.grid())?;
    let grid = f.grid();
    let (a, b) = fft::inverse_real_pair(grid, f.component(0), g.component(0));
    let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    SpectralField::from_components(grid, vec![fft::forward_real(grid, &p)], true)
}

/// Physical values of the 2/3-truncated field.
fn dealiased_physical(field: &SpectralField, mask: &[bool]) -> Vec<Vec<f64>> {
    let mut t = field.clone();
    for c in 0..t.ncomp() {
        for (v, &keep) in t.component_mut(c).iter_mut().zip(mask) {
            if !keep {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }
    t.to_physical()
}

/// Given physical entries A[i][j] (row-major, dim×dim), returns the dealiased div A, (div A)_i = Σ_j ∂_j A_ij.
fn flux_divergence(grid: &Grid, entries: &[Vec<f64>], mask: &[bool], symmetric: bool) -> Result<SpectralField> {
    let dim = grid.dim();
    // forward transform in pairs
    let mut hats: Vec<Vec<Complex64>> = Vec::with_capacity(entries.len());
    for pair in entries.chunks(2) {
        if pair.len() == 2 {
            let (a, b) = fft::forward_real_pair(grid, &pair[0], &pair[1]);
            hats.push(a);
            hats.push(b);
        } else {
            hats.push(fft::forward_real(grid, &pair[0]));
        }
    }
    let entry = |i: usize, j: usize| -> usize {
        if symmetric {
            sym_index(dim, i, j)
        } else {
            i * dim + j
        }
    };
    let mut comps = vec![grid.zeros(); dim];
    for_each_xi(grid, |k, xi| {
        if !mask[k] {
            return;
        }
        for i in 0..dim {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..dim {
                s += hats[entry(i, j)][k] * xi[j];
            }
            comps[i][k] = I * s;
        }
    });
    SpectralField::from_components(grid, comps, true)
}

/// Index of (i, j) in the packed upper triangle used for symmetric tensors.
pub(crate) fn sym_index(dim: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    match dim {
        2 => [[0, 1], [1, 2]][a][b],
        _ => [[0, 1, 2], [1, 3, 4], [2, 4, 5]][a][b],
    }
}

pub(crate) fn sym_pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            v.push((i, j));
        }
    }
    v
}

/// div(u⊗v) with (div(u⊗v))_i = Σ_j ∂_j(u_i v_j), 2/3-rule dealiased, not projected.
pub fn tensor_divergence(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    require_vector(u)?;
    require_vector(v)?;
    u.grid().check_same(v.grid())?;
    let grid = u.grid();
    let mask = dealias_mask(grid);
    let dim = grid.dim();
    let pu = dealiased_physical(u, &mask);
    let pv = dealiased_physical(v, &mask);
    let mut entries = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            entries.push(pu[i].iter().zip(&pv[j]).map(|(a, b)| a * b).collect());
        }
    }
    flux_divergence(grid, &entries, &mask, false)
}

/// ℙ div(u⊗v), pseudo-spectral with 2/3-rule dealiasing.
pub fn nonlinear_term(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    leray_project(&tensor_divergence(u, v)?)
}

/// ℙ div(u⊗u) using the symmetric products only.
pub fn nonlinear_self(u: &SpectralField) -> Result<SpectralField> {
    require_vector(u)?;
    let grid = u.grid();
    let mask = dealias_mask(grid);
    let p = dealiased_physical(u, &mask);
    let entries: Vec<Vec<f64>> = sym_pairs(grid.dim())
        .into_iter()
        .map(|(i, j)| p[i].iter().zip(&p[j]).map(|(a, b)| a * b).collect())
        .collect();
    leray_project(&flux_divergence(grid, &entries, &mask, true)?)
}

/// ℙ div(U⊗U − w⊗w) for two vector fields, sharing one set of transforms.
pub fn nonlinear_difference(big: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
    require_vector(big)?;
    require_vector(w)?;
    big.grid().check_same(w.grid())?;
    let grid = big.grid();
    let mask = dealias_mask(grid);
    let p = dealiased_physical(big, &mask);
    let q = dealiased_physical(w, &mask);
    let entries: Vec<Vec<f64>> = sym_pairs(grid.dim())
        .into_iter()
        .map(|(i, j)| {
            (0..grid.len())
                .map(|k| p[i][k] * p[j][k] - q[i][k] * q[j][k])
                .collect()
        })
        .collect();
    leray_project(&flux_divergence(grid, &entries, &mask, true)?)
}

/// Copies coefficients onto another lattice with the same box length (zero padding or truncation).
pub fn resample(field: &SpectralField, target: &Grid) -> Result<SpectralField> {
    let src = field.grid();
    if src.dim() != target.dim() || src.length().to_bits() != target.length().to_bits() {
        return Err(Error::GridMismatch);
    }
    let mut comps = vec![target.zeros(); field.ncomp()];
    let s = src.shape3();
    let mut idx = 0;
    for i0 in 0..s[0] {
        for i1 in 0..s[1] {
            for i2 in 0..s[2] {
                let k = [src.k(0, i0), src.k(1, i1), src.k(2, i2)];
                if let Some(j) = target.index_of(k) {
                    for c in 0..field.ncomp() {
                        comps[c][j] = field.component(c)[idx];
                    }
                }
                idx += 1;
            }
        }
    }
    SpectralField::from_components(target, comps, field.is_real())
}

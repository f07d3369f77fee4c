//! Multidimensional FFT over the grid layout (row-major, last axis contiguous).
//!
//! Forward transforms are normalized by 1/N so that f(x) = Σ_k ĉ_k e^{iξ_k·x}.

use num_complex::Complex64;

use crate::grid::Grid;

const BATCH: usize = 32;

pub(crate) fn forward(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, false);
    let scale = 1.0 / data.len() as f64;
    for c in data.iter_mut() {
        *c *= scale;
    }
}

pub(crate) fn inverse(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, true);
}

fn transform(grid: &Grid, data: &mut [Complex64], inv: bool) {
    debug_assert_eq!(data.len(), grid.len());
    let shape = grid.shape3();
    let mut scratch = Vec::new();
    let mut buf = Vec::new();
    for axis in 0..grid.dim() {
        let n = shape[axis];
        let stride: usize = shape[axis + 1..].iter().product();
        let plan = grid.plan(axis, inv);
        let need = plan.get_inplace_scratch_len();
        if scratch.len() < need {
            scratch.resize(need, Complex64::new(0.0, 0.0));
        }
        if stride == 1 {
            plan.process_with_scratch(data, &mut scratch[..need]);
            continue;
        }
        let block = n * stride;
        buf.resize(n * BATCH, Complex64::new(0.0, 0.0));
        for chunk in data.chunks_mut(block) {
            let mut c0 = 0;
            while c0 < stride {
                let w = BATCH.min(stride - c0);
                for i in 0..n {
                    let row = &chunk[i * stride + c0..i * stride + c0 + w];
                    for (b, v) in row.iter().enumerate() {
                        buf[b * n + i] = *v;
                    }
                }
                plan.process_with_scratch(&mut buf[..w * n], &mut scratch[..need]);
                for i in 0..n {
                    let row = &mut chunk[i * stride + c0..i * stride + c0 + w];
                    for (b, v) in row.iter_mut().enumerate() {
                        *v = buf[b * n + i];
                    }
                }
                c0 += w;
            }
        }
    }
}

/// Forward transform of two real arrays packed as a + ib, returned as (â, b̂).
pub(crate) fn forward_real_pair(
    grid: &Grid,
    a: &[f64],
    b: &[f64],
) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
    forward(grid, &mut z);
    unpack_pair(grid, &z)
}

/// Splits the transform of a + ib into the transforms of a and b.
pub(crate) fn unpack_pair(grid: &Grid, z: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = z.len();
    let mut fa = vec![Complex64::new(0.0, 0.0); n];
    let mut fb = vec![Complex64::new(0.0, 0.0); n];
    let shape = grid.shape3();
    let neg: [Vec<usize>; 3] = std::array::from_fn(|a| (0..shape[a]).map(|i| (shape[a] - i) % shape[a]).collect());
    let mut idx = 0;
    for i0 in 0..shape[0] {
        for i1 in 0..shape[1] {
            let base = (neg[0][i0] * shape[1] + neg[1][i1]) * shape[2];
            for i2 in 0..shape[2] {
                let zk = z[idx];
                let zm = z[base + neg[2][i2]].conj();
                fa[idx] = (zk + zm) * 0.5;
                fb[idx] = (zk - zm) * Complex64::new(0.0, -0.5);
                idx += 1;
            }
        }
    }
    (fa, fb)
}

/// Inverse transform of two Hermitian spectra at once; returns the real arrays.
pub(crate) fn inverse_real_pair(grid: &Grid, fa: &[Complex64], fb: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let i = Complex64::new(0.0, 1.0);
    let mut z: Vec<Complex64> = fa.iter().zip(fb).map(|(&x, &y)| x + i * y).collect();
    inverse(grid, &mut z);
    (z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect())
}

pub(crate) fn inverse_real(grid: &Grid, f: &[Complex64]) -> Vec<f64> {
    let mut z = f.to_vec();
    inverse(grid, &mut z);
    z.iter().map(|c| c.re).collect()
}

pub(crate) fn forward_real(grid: &Grid, a: &[f64]) -> Vec<Complex64> {
    let mut z: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward(grid, &mut z);
    z
}

//! Littlewood–Paley blocks and the norms built on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{pointwise_magnitude, SpectralField, Trajectory};
use crate::grid::Grid;

/// Smooth step: 0 for x ≤ 0, 1 for x ≥ 1, built from e^{−1/x}.
pub fn smooth_step(x: f64) -> f64 {
    fn g(x: f64) -> f64 {
        if x > 0.0 {
            (-1.0 / x).exp()
        } else {
            0.0
        }
    }
    let a = g(x);
    let b = g(1.0 - x);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Generating annular bump: 1 on [3/4, 3/2], supported in [1/2, 2].
pub fn phi0_hat(rho: f64) -> f64 {
    smooth_step((rho - 0.5) / 0.25) * smooth_step((2.0 - rho) / 0.5)
}

/// Normalized block weight φ̂_j(ξ) = φ̂₀(2^{−j}|ξ|) / Σ_m φ̂₀(2^{−m}|ξ|).
pub fn block_weight(j: i32, rho: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let num = phi0_hat(rho * 2f64.powi(-j));
    if num == 0.0 {
        return 0.0;
    }
    let m0 = rho.log2().floor() as i32;
    let den: f64 = (m0 - 2..=m0 + 2).map(|m| phi0_hat(rho * 2f64.powi(-m))).sum();
    num / den
}

/// Sparse per-block weights on a grid.
#[derive(Clone, Debug)]
pub struct DyadicPartition {
    grid: Grid,
    j_min: i32,
    j_max: i32,
    blocks: Vec<Vec<(u32, f64)>>,
}

impl DyadicPartition {
    /// Every block whose annulus meets the lattice.
    pub fn for_grid(grid: &Grid) -> Self {
        let (lo, hi) = Self::admissible(grid);
        Self::build(grid, lo, hi).expect("admissible range")
    }

    /// Lowest and highest blocks that carry lattice frequencies.
    pub fn admissible(grid: &Grid) -> (i32, i32) {
        let dxi = grid.dxi();
        let top = grid.max_xi();
        // smallest j with 2^{j+1} > dxi, largest j with 2^{j-1} < top
        let mut lo = dxi.log2().floor() as i32 + 2;
        while 2f64.powi(lo) > dxi {
            lo -= 1;
        }
        let mut hi = top.log2().floor() as i32 - 2;
        while 2f64.powi(hi) < top {
            hi += 1;
        }
        (lo, hi)
    }

    pub fn build(grid: &Grid, j_min: i32, j_max: i32) -> Result<Self> {
        let (lo, hi) = Self::admissible(grid);
        if j_min > j_max || j_min < lo || j_max > hi {
            return Err(Error::InvalidArgument(format!(
                "block range [{j_min}, {j_max}] outside the lattice range [{lo}, {hi}]"
            )));
        }
        let nb = (j_max - j_min + 1) as usize;
        let mut blocks = vec![Vec::new(); nb];
        for (i, &x2) in grid.xi2().iter().enumerate() {
            if x2 == 0.0 {
                continue;
            }
            let rho = x2.sqrt();
            let jc = rho.log2().floor() as i32;
            for j in jc - 1..=jc + 1 {
                if j < j_min || j > j_max {
                    continue;
                }
                let w = block_weight(j, rho);
                if w > 0.0 {
                    blocks[(j - j_min) as usize].push((i as u32, w));
                }
            }
        }
        Ok(DyadicPartition { grid: grid.clone(), j_min, j_max, blocks })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn range(&self) -> std::ops::RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    /// φ̂_j at an arbitrary frequency magnitude.
    pub fn weight(&self, j: i32, rho: f64) -> f64 {
        block_weight(j, rho)
    }

    /// Nonzero (flat index, weight) pairs of block j.
    pub fn entries(&self, j: i32) -> Result<&[(u32, f64)]> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::BlockOutOfRange(j));
        }
        Ok(&self.blocks[(j - self.j_min) as usize])
    }

    /// Δ_j f.
    pub fn block_project(&self, field: &SpectralField, j: i32) -> Result<SpectralField> {
        self.grid.check_same(field.grid())?;
        let e = self.entries(j)?;
        let comps = (0..field.ncomp())
            .map(|c| {
                let src = field.component(c);
                let mut dst = self.grid.zeros();
                for &(i, w) in e {
                    dst[i as usize] = src[i as usize] * w;
                }
                dst
            })
            .collect();
        SpectralField::from_components(&self.grid, comps, field.is_real())
    }

    /// Physical samples of Δ_j f per component; `None` when the block carries nothing.
    pub fn block_physical(&self, field: &SpectralField, j: i32) -> Result<Option<Vec<Vec<f64>>>> {
        self.grid.check_same(field.grid())?;
        let e = self.entries(j)?;
        let nonzero = (0..field.ncomp())
            .any(|c| e.iter().any(|&(i, _)| field.component(c)[i as usize] != Complex64::new(0.0, 0.0)));
        if !nonzero {
            return Ok(None);
        }
        let mut out = Vec::with_capacity(field.ncomp());
        let mut c = 0;
        while c < field.ncomp() {
            let mut a = self.grid.zeros();
            for &(i, w) in e {
                a[i as usize] = field.component(c)[i as usize] * w;
            }
            if c + 1 < field.ncomp() {
                let mut b = self.grid.zeros();
                for &(i, w) in e {
                    b[i as usize] = field.component(c + 1)[i as usize] * w;
                }
                let (x, y) = fft::inverse_real_pair(&self.grid, &a, &b);
                out.push(x);
                out.push(y);
                c += 2;
            } else {
                out.push(fft::inverse_real(&self.grid, &a));
                c += 1;
            }
        }
        Ok(Some(out))
    }

    /// L^p norms of every block, pointwise Euclidean over components.
    pub fn block_lp(&self, field: &SpectralField, p: f64) -> Result<Vec<f64>> {
        let cv = self.grid.cell_volume();
        self.range()
            .map(|j| {
                Ok(match self.block_physical(field, j)? {
                    None => 0.0,
                    Some(vals) => lp_quadrature(&pointwise_magnitude(&vals), p, cv),
                })
            })
            .collect()
    }
}

/// (cell volume · Σ|v|^p)^{1/p}, or max|v| for p = ∞.
pub fn lp_quadrature(values: &[f64], p: f64, cell_volume: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        let s: f64 = values.iter().map(|v| v.abs().powf(p)).sum();
        (s * cell_volume).powf(1.0 / p)
    }
}

/// ℓ^q aggregation.
pub fn lq_sum(values: impl IntoIterator<Item = f64>, q: f64) -> f64 {
    if q.is_infinite() {
        values.into_iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        values.into_iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Besov exponents (s, p, q) with an optional time exponent r.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovIndex {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub r: Option<f64>,
}

impl BesovIndex {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q)] {
            if !(v >= 1.0) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must lie in [1, ∞]")));
            }
        }
        if !s.is_finite() {
            return Err(Error::InvalidArgument("s must be finite".into()));
        }
        Ok(BesovIndex { s, p, q, r: None })
    }

    pub fn with_time(mut self, r: f64) -> Result<Self> {
        if !(r >= 1.0) {
            return Err(Error::InvalidArgument(format!("r = {r} must lie in [1, ∞]")));
        }
        self.r = Some(r);
        Ok(self)
    }

    /// Whether s = n/p − 1.
    pub fn is_critical(&self, n: usize) -> bool {
        (self.s - (n as f64 / self.p - 1.0)).abs() < 1e-12
    }
}

/// A norm value together with the per-block evidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub value: f64,
    pub index: BesovIndex,
    pub time_window: Option<(f64, f64)>,
    /// (j, 2^{sj}·block norm)
    pub block_profile: Vec<(i32, f64)>,
}

/// Homogeneous Besov norm ‖{2^{sj}‖Δ_j f‖_{L^p}}‖_{ℓ^q}; the zero mode is ignored.
pub fn besov_norm(field: &SpectralField, partition: &DyadicPartition, index: BesovIndex) -> Result<NormSample> {
    let blocks = partition.block_lp(field, index.p)?;
    let profile: Vec<(i32, f64)> = partition
        .range()
        .zip(blocks)
        .map(|(j, b)| (j, 2f64.powf(index.s * j as f64) * b))
        .collect();
    Ok(NormSample {
        value: lq_sum(profile.iter().map(|x| x.1), index.q),
        index,
        time_window: None,
        block_profile: profile,
    })
}

/// Weak Lebesgue norm via the decreasing rearrangement on the grid.
pub fn weak_lebesgue_norm(field: &SpectralField, p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("weak L^p needs 1 < p < ∞, got {p}")));
    }
    Ok(weak_lebesgue_values(
        pointwise_magnitude(&field.to_physical()),
        p,
        field.grid().cell_volume(),
    ))
}

pub fn weak_lebesgue_values(mut a: Vec<f64>, p: f64, cell_volume: f64) -> f64 {
    a.sort_unstable_by(|x, y| y.total_cmp(x));
    let e = 1.0 - 1.0 / p;
    let mut acc = 0.0;
    let mut best = 0.0f64;
    for (m, v) in a.iter().enumerate() {
        acc += v;
        let val = cell_volume * acc * (cell_volume * (m + 1) as f64).powf(-e);
        best = best.max(val);
    }
    best
}

/// Trapezoid L^r over samples, or the max for r = ∞.
pub fn time_lr(times: &[f64], values: &[f64], r: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if r.is_infinite() {
        return Ok(values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    if values.len() < 2 {
        return Err(Error::InvalidArgument("temporal L^r with r < ∞ needs two samples".into()));
    }
    let mut s = 0.0;
    for i in 1..values.len() {
        let dt = times[i] - times[i - 1];
        s += 0.5 * dt * (values[i].abs().powf(r) + values[i - 1].abs().powf(r));
    }
    Ok(s.powf(1.0 / r))
}

/// Per-sample block L^p norms of a trajectory: rows are samples, columns blocks.
pub fn block_table(traj: &Trajectory, partition: &DyadicPartition, p: f64) -> Result<Vec<Vec<f64>>> {
    traj.samples().iter().map(|f| partition.block_lp(f, p)).collect()
}

/// Chemin–Lerner norm ‖{2^{sj}‖Δ_j F‖_{L^r(I;L^p)}}‖_{ℓ^q}.
pub fn chemin_lerner_norm(traj: &Trajectory, partition: &DyadicPartition, index: BesovIndex) -> Result<NormSample> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let table = block_table(traj, partition, index.p)?;
    chemin_lerner_from_table(traj.times(), &table, partition, index)
}

/// Chemin–Lerner norm from a precomputed block table (see [`block_table`]).
pub fn chemin_lerner_from_table(
    times: &[f64],
    table: &[Vec<f64>],
    partition: &DyadicPartition,
    index: BesovIndex,
) -> Result<NormSample> {
    let r = index
        .r
        .ok_or_else(|| Error::InvalidArgument("Chemin–Lerner norm needs a time exponent".into()))?;
    if table.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut profile = Vec::new();
    for (b, j) in partition.range().enumerate() {
        let col: Vec<f64> = table.iter().map(|row| row[b]).collect();
        profile.push((j, 2f64.powf(index.s * j as f64) * time_lr(times, &col, r)?));
    }
    Ok(NormSample {
        value: lq_sum(profile.iter().map(|x| x.1), index.q),
        index,
        time_window: Some((times[0], *times.last().unwrap())),
        block_profile: profile,
    })
}

/// ‖f‖_{X^N} = ‖f‖_{L̃^∞Ḃ¹_{1,1}} + √N‖f‖_{L̃^N Ḃ^{1+2/N}_{1,2}}.
pub fn xn_norm(traj: &Trajectory, partition: &DyadicPartition, n: f64) -> Result<f64> {
    let table = block_table(traj, partition, 1.0)?;
    let a = chemin_lerner_from_table(
        traj.times(),
        &table,
        partition,
        BesovIndex::new(1.0, 1.0, 1.0)?.with_time(f64::INFINITY)?,
    )?;
    let b = chemin_lerner_from_table(
        traj.times(),
        &table,
        partition,
        BesovIndex::new(1.0 + 2.0 / n, 1.0, 2.0)?.with_time(n)?,
    )?;
    Ok(a.value + n.sqrt() * b.value)
}

/// sup_{j ≤ j_cut} 2^{−j}‖Δ_j f‖_{L^∞}.
pub fn low_block_sup(field: &SpectralField, partition: &DyadicPartition, j_cut: i32) -> Result<f64> {
    if j_cut < partition.j_min() || j_cut > partition.j_max() {
        return Err(Error::BlockOutOfRange(j_cut));
    }
    let mut best = 0.0f64;
    for j in partition.j_min()..=j_cut {
        if let Some(vals) = partition.block_physical(field, j)? {
            let m = pointwise_magnitude(&vals).into_iter().fold(0.0, f64::max);
            best = best.max(2f64.powi(-j) * m);
        }
    }
    Ok(best)
}

/// Bony decomposition fg = T_f g + R(f, g) + T_g f for mean-free scalar fields.
///
/// Zero modes of the inputs are dropped. Products are formed on the grid and
/// truncated by the 2/3 rule.
pub fn paraproduct_decompose(
    f: &SpectralField,
    g: &SpectralField,
    partition: &DyadicPartition,
) -> Result<(SpectralField, SpectralField, SpectralField)> {
    if f.ncomp() != 1 || g.ncomp() != 1 {
        return Err(Error::InvalidArgument("paraproducts act on scalar fields".into()));
    }
    f.grid().check_same(g.grid())?;
    partition.grid().check_same(f.grid())?;
    let grid = f.grid();
    let n = grid.len();
    let range: Vec<i32> = partition.range().collect();
    let phys = |h: &SpectralField| -> Result<Vec<Vec<f64>>> {
        range
            .iter()
            .map(|&j| Ok(partition.block_physical(h, j)?.map(|mut v| v.remove(0)).unwrap_or_else(|| vec![0.0; n])))
            .collect()
    };
    let fb = phys(f)?;
    let gb = phys(g)?;
    let nb = range.len();
    let mut tfg = vec![0.0; n];
    let mut tgf = vec![0.0; n];
    let mut rem = vec![0.0; n];
    let mut sf = vec![0.0; n];
    let mut sg = vec![0.0; n];
    for k in 0..nb {
        if k >= 3 {
            for i in 0..n {
                sf[i] += fb[k - 3][i];
                sg[i] += gb[k - 3][i];
            }
        }
        for i in 0..n {
            tfg[i] += sf[i] * gb[k][i];
            tgf[i] += sg[i] * fb[k][i];
        }
        for l in k.saturating_sub(2)..(k + 3).min(nb) {
            for i in 0..n {
                rem[i] += fb[k][i] * gb[l][i];
            }
        }
    }
    let to_field = |v: Vec<f64>| -> Result<SpectralField> {
        let s = SpectralField::from_physical(grid, &[v])?;
        Ok(crate::spectral::dealias(&s))
    };
    Ok((to_field(tfg)?, to_field(rem)?, to_field(tgf)?))
}

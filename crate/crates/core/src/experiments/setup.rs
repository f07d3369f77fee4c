//! Config-driven experiment runs.
//!
//! [`run_experiment`] maps a subcommand name and a [`Config`] to a [`Report`].
//! Every numeric parameter is read from the config; a missing key is an error,
//! so the checked-in `configs/*.cfg` files are the single source of defaults.

use std::path::Path;

use super::bilinear::{bilinear_ratio_suite, BilinearSpec};
use super::report::{NormRecord, Report, Table};
use super::runs::*;
use super::{check_cos_lemma, estimate_cstar, find_t_star, second_iteration_check, SecondIterationSpec};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::forcing::{make_bump, NonoscVariant};
use crate::grid::Grid;
use crate::lp::{besov_norm, BesovIndex, DyadicPartition};
use crate::random;
use crate::snapshot::{read_snapshot, write_snapshot};
use crate::spectral;

/// Subcommands that produce a report.
pub const EXPERIMENTS: [&str; 9] =
    ["norms", "lemma-cos", "cstar", "project", "simulate", "oscillate", "stability", "nonosc", "bilinear"];

fn missing(key: &str) -> Error {
    Error::Config { line: 0, msg: format!("missing key `{key}`") }
}

fn real(cfg: &Config, key: &str) -> Result<f64> {
    cfg.f64(key)?.ok_or_else(|| missing(key))
}

fn count(cfg: &Config, key: &str) -> Result<usize> {
    cfg.parsed(key)?.ok_or_else(|| missing(key))
}

fn reals(cfg: &Config, key: &str) -> Result<Vec<f64>> {
    cfg.f64_list(key)?.ok_or_else(|| missing(key))
}

fn seed(cfg: &Config) -> Result<u64> {
    Ok(cfg.parsed("seed")?.unwrap_or(0))
}

fn opt_t_star(cfg: &Config) -> Result<Option<f64>> {
    match cfg.get("t_star") {
        None | Some("auto") => Ok(None),
        Some(_) => cfg.f64("t_star"),
    }
}

/// `grid = 64` (cubic) or `grid = 256,32,32`.
fn shape(cfg: &Config, dim: usize) -> Result<Vec<usize>> {
    let s = cfg.usize_list("grid")?.ok_or_else(|| missing("grid"))?;
    match s.len() {
        1 => Ok(vec![s[0]; dim]),
        n if n == dim => Ok(s),
        n => Err(Error::Config { line: 0, msg: format!("grid has {n} entries for dim = {dim}") }),
    }
}

fn grid(cfg: &Config, dim: usize) -> Result<Grid> {
    Grid::with_shape(dim, &shape(cfg, dim)?, real(cfg, "length")?)
}

const COMMON: [&str; 4] = ["seed", "grid", "length", "dim"];

fn keys(cfg: &Config, extra: &[&str]) -> Result<()> {
    let all: Vec<&str> = COMMON.iter().chain(extra).copied().collect();
    cfg.check_keys(&all)
}

fn base_report(name: &str, cfg: &Config) -> Result<Report> {
    let mut rep = Report::new(name);
    rep.seed = seed(cfg)?;
    rep.config = cfg.entries().clone();
    Ok(rep)
}

/// Runs one experiment; `out` receives auxiliary artifacts such as snapshots.
pub fn run_experiment(name: &str, cfg: &Config, out: Option<&Path>) -> Result<Report> {
    match name {
        "norms" => norms(cfg),
        "lemma-cos" => lemma_cos(cfg),
        "cstar" => cstar(cfg),
        "project" => project(cfg, out),
        "simulate" => simulate(cfg),
        "oscillate" => oscillate(cfg),
        "stability" => stability(cfg),
        "nonosc" => nonosc(cfg),
        "bilinear" => bilinear(cfg),
        other => Err(Error::InvalidArgument(format!("unknown experiment `{other}`"))),
    }
}

fn input_field(cfg: &Config, dim: usize) -> Result<SpectralField> {
    if let Some(path) = cfg.get("input") {
        return read_snapshot(path);
    }
    let g = grid(cfg, dim)?;
    let mut rng = random::rng(seed(cfg)?);
    Ok(random::band_limited(&g, dim, real(cfg, "radius")?, &mut rng))
}

fn norms(cfg: &Config) -> Result<Report> {
    keys(cfg, &["input", "radius", "s", "p", "q"])?;
    let dim = count(cfg, "dim")?;
    let f = input_field(cfg, dim)?;
    let part = DyadicPartition::for_grid(f.grid());
    let (p, q) = (real(cfg, "p")?, real(cfg, "q")?);
    let s = match cfg.get("s") {
        Some("critical") => f.grid().dim() as f64 / p - 1.0,
        _ => real(cfg, "s")?,
    };
    let ns = besov_norm(&f, &part, BesovIndex::new(s, p, q)?)?;
    let mut rep = base_report("norms", cfg)?;
    rep.scalar("besov", ns.value);
    rep.scalar("l2", f.l2_norm());
    rep.scalar("divergence", spectral::divergence(&f)?.max_abs());
    rep.check("finite", ns.value.is_finite());
    rep.norms.push(NormRecord::from_sample("besov", &ns));
    Ok(rep)
}

fn lemma_cos(cfg: &Config) -> Result<Report> {
    keys(cfg, &["s", "p", "radii", "slope_tol", "max_blocks"])?;
    let g = grid(cfg, count(cfg, "dim")?)?;
    let radii = reals(cfg, "radii")?;
    let tol = real(cfg, "slope_tol")?;
    let max_blocks = count(cfg, "max_blocks")?;
    let mut rep = base_report("lemma_cos", cfg)?;
    let mut table = Table::new(&["s", "p", "radius", "norm", "nonzero_blocks"]);
    let mut fits = Table::new(&["s", "p", "slope"]);
    for &s in &reals(cfg, "s")? {
        for &p in &reals(cfg, "p")? {
            let fit = check_cos_lemma(&g, s, p, &radii)?;
            let tag = format!("s={s},p={p}");
            rep.scalar(format!("slope[{tag}]"), fit.slope);
            rep.check(format!("slope[{tag}]"), (fit.slope - s).abs() <= tol);
            rep.check(format!("blocks[{tag}]"), fit.nonzero_blocks.iter().all(|&c| c <= max_blocks));
            for (i, &r) in radii.iter().enumerate() {
                table.push(vec![s, p, r, fit.norms[i], fit.nonzero_blocks[i] as f64]);
                rep.norms.push(NormRecord::from_sample(format!("cos[{tag},R={r}]"), &fit.profiles[i]));
            }
            fits.push(vec![s, p, fit.slope]);
        }
    }
    rep.tables.insert("norms".into(), table);
    rep.tables.insert("fits".into(), fits);
    Ok(rep)
}

fn cstar(cfg: &Config) -> Result<Report> {
    keys(cfg, &["refine_grid", "length_alt", "refine_tol", "r", "sigma", "h"])?;
    let g = grid(cfg, 3)?;
    let c = estimate_cstar(&g)?;
    let mut rep = base_report("cstar", cfg)?;
    rep.scalar("cstar", c);
    rep.check("positive", c > 0.0);
    if let Some(fine) = cfg.usize_list("refine_grid")? {
        let shape = if fine.len() == 1 { vec![fine[0]; 3] } else { fine };
        let cf = estimate_cstar(&Grid::with_shape(3, &shape, g.length())?)?;
        let drift = cf / c - 1.0;
        rep.scalar("cstar_refined", cf);
        rep.scalar("refine_drift", drift);
        rep.check("refine_stable", drift.abs() <= real(cfg, "refine_tol")?);
    }
    if let Some(l2) = cfg.f64("length_alt")? {
        let points: Vec<usize> = (0..3).map(|a| g.shape()[a]).collect();
        rep.scalar("cstar_length_alt", estimate_cstar(&Grid::with_shape(3, &points, l2)?)?);
    }
    // ψ ↦ λψ scales Φ and hence ĉ_* by λ².
    let bump = make_bump(&g)?;
    let doubled = crate::forcing::BumpProfile { field: bump.field.scaled(2.0), ..bump.clone() };
    let c2 = super::cstar_for(&doubled)?;
    rep.scalar("scaling_exponent", (c2 / c).log2());
    rep.check("scaling_quadratic", ((c2 / c) / 4.0 - 1.0).abs() <= 0.01);
    if cfg.contains("r") {
        let ts = find_t_star(&bump, real(cfg, "r")?, real(cfg, "sigma")?, real(cfg, "h")?, 0.5, 200.0)?;
        rep.flag("t_star_found", ts.is_some());
        if let Some(ts) = ts {
            rep.scalar("t_star", ts.t_star);
            rep.scalar("t_star_bound", ts.bound);
            let mut curve = Table::new(&["t", "norm"]);
            for (t, v) in ts.curve {
                curve.push(vec![t, v]);
            }
            rep.tables.insert("t_star_curve".into(), curve);
        }
    }
    Ok(rep)
}

fn project(cfg: &Config, out: Option<&Path>) -> Result<Report> {
    keys(cfg, &["input", "output", "radius"])?;
    let dim = count(cfg, "dim")?;
    let f = input_field(cfg, dim)?;
    let p = spectral::leray_project(&f)?;
    let pp = spectral::leray_project(&p)?;
    let scale = f.max_coefficient().max(f64::MIN_POSITIVE);
    let mut rep = base_report("project", cfg)?;
    let idem = pp.sub(&p)?.l2_norm() / p.l2_norm().max(f64::MIN_POSITIVE);
    let div = spectral::divergence(&p)?.max_abs() / scale;
    rep.scalar("divergence_before", spectral::divergence(&f)?.max_abs());
    rep.scalar("divergence_after", div);
    rep.scalar("idempotence", idem);
    rep.check("idempotent", idem < 1e-10);
    rep.check("divergence_free", div < 1e-10);
    let target = match (cfg.get("output"), out) {
        (Some(path), _) => Some(std::path::PathBuf::from(path)),
        (None, Some(dir)) => Some(dir.join("projected.nsfd")),
        _ => None,
    };
    if let Some(path) = target {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        write_snapshot(&path, &p)?;
    }
    Ok(rep)
}

fn simulate(cfg: &Config) -> Result<Report> {
    match cfg.get("mode") {
        Some("cross_oracle") => simulate_cross(cfg),
        Some("picard_gate") => simulate_picard(cfg),
        Some("second_iteration") => simulate_second(cfg),
        Some(other) => Err(Error::Config { line: 0, msg: format!("unknown simulate mode `{other}`") }),
        None => Err(missing("mode")),
    }
}

fn simulate_cross(cfg: &Config) -> Result<Report> {
    keys(cfg, &["mode", "horizon", "dt", "eta", "beta", "t_star", "n_scale", "m", "datum", "tol"])?;
    let dim = count(cfg, "dim")?;
    let spec = CrossOracleSpec {
        dim,
        points: shape(cfg, dim)?[0],
        length: real(cfg, "length")?,
        horizon: real(cfg, "horizon")?,
        dt: real(cfg, "dt")?,
        eta: real(cfg, "eta")?,
        beta: real(cfg, "beta")?,
        t_star: real(cfg, "t_star")?,
        n_scale: count(cfg, "n_scale")? as u32,
        m: real(cfg, "m")?,
        datum: real(cfg, "datum")?,
        seed: seed(cfg)?,
    };
    let o = cross_oracle(&spec)?;
    let mut rep = base_report("simulate", cfg)?;
    rep.scalar("terminal_error", o.terminal_error);
    rep.scalar("max_error", o.max_error);
    rep.scalar("max_contraction", o.max_contraction);
    rep.scalar("picard_iterations", o.picard_iterations as f64);
    rep.scalar("stepper_divergence", o.stepper_divergence);
    rep.scalar("mild_divergence", o.mild_divergence);
    rep.scalar("energy_residual", o.energy_residual);
    rep.scalar("terminal_l2", o.terminal_l2);
    rep.check("agreement", o.terminal_error <= real(cfg, "tol")?);
    Ok(rep)
}

fn simulate_picard(cfg: &Config) -> Result<Report> {
    keys(cfg, &["mode", "beta", "r", "sigma", "rho", "h", "t_star", "dt", "etas", "contraction_max", "eta_gate", "max_iter", "slope_min"])?;
    let spec = PicardGateSpec {
        shape: shape(cfg, 3)?,
        length: real(cfg, "length")?,
        beta: real(cfg, "beta")?,
        r: real(cfg, "r")?,
        sigma: real(cfg, "sigma")?,
        rho: real(cfg, "rho")?,
        h: real(cfg, "h")?,
        t_star: opt_t_star(cfg)?,
        dt: real(cfg, "dt")?,
        etas: reals(cfg, "etas")?,
    };
    let g = picard_gate(&spec)?;
    let mut rep = base_report("simulate", cfg)?;
    let gate = real(cfg, "eta_gate")?;
    let cmax = real(cfg, "contraction_max")?;
    let imax = count(cfg, "max_iter")?;
    let mut table = Table::new(&["eta", "max_contraction", "iterations", "u1", "u2", "remainder", "ratio", "c0"]);
    for r in &g.runs {
        table.push(vec![r.eta, r.max_ratio, r.iterations as f64, r.u1_norm, r.u2_norm, r.remainder_norm, r.ratio, r.c0]);
        rep.check(format!("converged[eta={}]", r.eta), r.converged && r.iterations <= imax);
        if r.eta <= gate {
            rep.check(format!("contraction[eta={}]", r.eta), r.max_ratio <= cmax);
        }
        rep.flag(format!("remainder_ledger[eta={}]", r.eta), r.ledger_ok);
    }
    rep.scalar("t_star", g.t_star);
    rep.scalar("slope", g.slope);
    rep.check("slope", g.slope >= real(cfg, "slope_min")?);
    rep.tables.insert("picard".into(), table);
    Ok(rep)
}

fn simulate_second(cfg: &Config) -> Result<Report> {
    keys(cfg, &["mode", "beta", "eta", "r", "sigma", "h", "t_star", "dt"])?;
    let g = grid(cfg, 3)?;
    let spec = SecondIterationSpec {
        beta: real(cfg, "beta")?,
        eta: real(cfg, "eta")?,
        r: real(cfg, "r")?,
        sigma: real(cfg, "sigma")?,
        h: real(cfg, "h")?,
        t_star: opt_t_star(cfg)?,
        dt: real(cfg, "dt")?,
    };
    let c = second_iteration_check(&g, &spec)?;
    let mut rep = base_report("simulate", cfg)?;
    rep.scalar("t_star", c.t_star);
    rep.scalar("cstar", c.cstar);
    rep.scalar("low_block_sup", c.low_block_sup);
    rep.scalar("window_contribution", c.window_contribution);
    rep.scalar("low_block_ratio", c.low_block_ratio);
    rep.scalar("window_ratio", c.window_ratio);
    rep.check("lower_bound", c.low_block_ratio >= 0.5);
    rep.check("window_small", c.window_ratio < 1.0);
    Ok(rep)
}

fn oscillate(cfg: &Config) -> Result<Report> {
    keys(
        cfg,
        &[
            "regime", "r", "sigma", "rho", "eta", "beta1", "h", "t_star", "n_scale", "m", "cycles", "dt", "decay_dt",
            "decay_check", "decay_cap", "threshold_factor", "sample_stride", "min_ratio", "peak_tol", "trough_factor",
            "forcing_tol",
        ],
    )?;
    let regime = match cfg.get("regime") {
        Some("highdim") => OscillationRegime::HighDim,
        Some("twodim") => OscillationRegime::TwoDim,
        Some(other) => return Err(Error::Config { line: 0, msg: format!("unknown regime `{other}`") }),
        None => return Err(missing("regime")),
    };
    let dim = if regime == OscillationRegime::HighDim { 3 } else { 2 };
    let two = regime == OscillationRegime::TwoDim;
    let spec = OscillationSpec {
        regime,
        shape: shape(cfg, dim)?,
        length: real(cfg, "length")?,
        r: if two { f64::NAN } else { real(cfg, "r")? },
        sigma: if two { f64::NAN } else { real(cfg, "sigma")? },
        rho: if two { f64::NAN } else { real(cfg, "rho")? },
        eta: real(cfg, "eta")?,
        beta1: if two { f64::NAN } else { real(cfg, "beta1")? },
        h: if two { f64::NAN } else { real(cfg, "h")? },
        t_star: if two { None } else { opt_t_star(cfg)? },
        n_scale: if two { count(cfg, "n_scale")? as u32 } else { 0 },
        m: if two { real(cfg, "m")? } else { f64::NAN },
        cycles: count(cfg, "cycles")?,
        dt: real(cfg, "dt")?,
        decay_dt: real(cfg, "decay_dt")?,
        decay_check: real(cfg, "decay_check")?,
        decay_cap: real(cfg, "decay_cap")?,
        threshold_factor: real(cfg, "threshold_factor")?,
        sample_stride: count(cfg, "sample_stride")?,
    };
    let o = run_oscillation(&spec)?;
    Ok(oscillation_report(&o, cfg)?)
}

/// Checks: every cycle conclusive with peak/trough ≥ `min_ratio`, peak low blocks
/// above the floor, peak spread ≤ `peak_tol`, troughs falling by `trough_factor`,
/// and (3D) consecutive window forcing norms within `forcing_tol` of the predicted ratio.
pub fn oscillation_report(o: &OscillationOutcome, cfg: &Config) -> Result<Report> {
    let mut rep = base_report("oscillate", cfg)?;
    if o.regime == OscillationRegime::HighDim {
        rep.scalar("cstar", o.cstar);
        rep.scalar("eps", o.eps);
    }
    rep.scalar("t_star", o.t_star);
    rep.scalar("peak_spread", o.peak_spread);
    rep.scalar("min_ratio", o.min_ratio);
    rep.flag("conclusive", o.conclusive);
    rep.check("conclusive", o.conclusive);
    rep.check("ratio", o.min_ratio >= real(cfg, "min_ratio")?);
    rep.check("peaks_equal", o.peak_spread <= real(cfg, "peak_tol")?);
    let tf = real(cfg, "trough_factor")?;
    rep.check("troughs_decay", !o.trough_factors.is_empty() && o.trough_factors.iter().all(|&f| f >= tf));
    let mut cycles = Table::new(&[
        "k", "t_k", "t_peak", "t_next", "norm_at_t_k", "peak", "peak_critical", "floor", "trough", "threshold",
        "forcing_norm", "carrier", "delta", "ratio",
    ]);
    for c in &o.cycles {
        cycles.push(vec![
            c.k as f64, c.t_k, c.t_peak, c.t_next, c.norm_at_t_k, c.peak, c.peak_critical, c.floor, c.trough,
            c.threshold, c.forcing_norm, c.carrier, c.delta, c.ratio,
        ]);
        rep.check(format!("peak_floor[{}]", c.k), c.peak >= c.floor);
    }
    for (i, &f) in o.trough_factors.iter().enumerate() {
        rep.scalar(format!("trough_factor[{}]", i + 1), f);
    }
    let n = if o.regime == OscillationRegime::HighDim { 3.0 } else { 2.0 };
    for (i, w) in o.cycles.windows(2).enumerate() {
        let measured = w[1].forcing_norm / w[0].forcing_norm;
        rep.scalar(format!("forcing_ratio[{}]", i + 1), measured);
        if o.regime == OscillationRegime::HighDim {
            // Ḃ^{n/r−3}_{r,σ} norm of the window scales as β^{n/r−1}.
            let r = o.critical.1;
            let predicted = (w[1].carrier / w[0].carrier).powf(n / r - 1.0);
            rep.scalar(format!("forcing_ratio_predicted[{}]", i + 1), predicted);
            rep.check(format!("forcing_halving[{}]", i + 1), (measured / predicted - 1.0).abs() <= real(cfg, "forcing_tol")?);
        } else {
            rep.flag(format!("forcing_halving[{}]", i + 1), (measured - 0.5).abs() <= 0.05);
        }
    }
    rep.norms.extend(o.profiles.iter().cloned());
    rep.tables.insert("series".into(), o.series.clone());
    rep.tables.insert("cycles".into(), cycles);
    Ok(rep)
}

fn stability(cfg: &Config) -> Result<Report> {
    keys(
        cfg,
        &[
            "p", "q", "beta", "etas", "window", "gap", "h", "horizon", "dt", "sample_stride", "datum", "return_time",
            "ratio_max",
        ],
    )?;
    let spec = StabilitySpec {
        points: shape(cfg, 3)?[0],
        length: real(cfg, "length")?,
        p: real(cfg, "p")?,
        q: real(cfg, "q")?,
        beta: real(cfg, "beta")?,
        etas: reals(cfg, "etas")?,
        window: real(cfg, "window")?,
        gap: real(cfg, "gap")?,
        h: real(cfg, "h")?,
        horizon: real(cfg, "horizon")?,
        dt: real(cfg, "dt")?,
        sample_stride: count(cfg, "sample_stride")?,
        datum: real(cfg, "datum")?,
        return_time: real(cfg, "return_time")?,
        seed: seed(cfg)?,
    };
    let o = run_stability(&spec)?;
    let mut rep = base_report("stability", cfg)?;
    rep.scalar("peak", o.peak);
    rep.scalar("terminal", o.terminal);
    rep.scalar("ratio", o.ratio);
    rep.scalar("single_ratio", o.single_ratio);
    rep.scalar("forcing_end", o.forcing_end);
    rep.check("decay", o.ratio < real(cfg, "ratio_max")?);
    rep.flag("envelope_monotone", o.envelope_monotone);
    rep.flag("free_monotone", o.free_monotone);
    let mut series = Table::new(&["t", "critical"]);
    for &(t, v) in &o.series {
        series.push(vec![t, v]);
    }
    let mut free = Table::new(&["t", "critical"]);
    for &(t, v) in &o.free_series {
        free.push(vec![t, v]);
    }
    let mut forcing = Table::new(&["window", "forcing_norm"]);
    for (i, &v) in o.forcing_norms.iter().enumerate() {
        forcing.push(vec![i as f64 + 1.0, v]);
    }
    rep.tables.insert("series".into(), series);
    rep.tables.insert("free".into(), free);
    rep.tables.insert("forcing".into(), forcing);
    rep.norms.extend(o.profiles.iter().cloned());
    Ok(rep)
}

fn nonosc(cfg: &Config) -> Result<Report> {
    keys(
        cfg,
        &[
            "variant", "eps", "eta", "p", "fit_grid", "fit_radius", "fit_octaves", "tail_horizon", "dt",
            "sample_stride", "k0", "i1_horizon", "slope_tol",
        ],
    )?;
    let variant = match cfg.get("variant") {
        Some("highdim") => NonoscVariant::HighDim,
        Some("lacunary") => NonoscVariant::Lacunary,
        Some(other) => return Err(Error::Config { line: 0, msg: format!("unknown variant `{other}`") }),
        None => return Err(missing("variant")),
    };
    let fit_shape = cfg.usize_list("fit_grid")?.ok_or_else(|| missing("fit_grid"))?;
    let oct = cfg.f64_list("fit_octaves")?.ok_or_else(|| missing("fit_octaves"))?;
    if oct.len() != 2 {
        return Err(Error::Config { line: 0, msg: "fit_octaves needs two entries".into() });
    }
    let spec = NonoscRunSpec {
        variant,
        eps: real(cfg, "eps")?,
        eta: real(cfg, "eta")?,
        p: real(cfg, "p")?,
        length: real(cfg, "length")?,
        fit_shape: if fit_shape.len() == 1 { vec![fit_shape[0]; 3] } else { fit_shape },
        fit_radius: real(cfg, "fit_radius")?,
        fit_octaves: (oct[0] as i32, oct[1] as i32),
        tail_shape: shape(cfg, 3)?,
        tail_horizon: real(cfg, "tail_horizon")?,
        dt: real(cfg, "dt")?,
        sample_stride: count(cfg, "sample_stride")?,
        k0: cfg.parsed("k0")?.ok_or_else(|| missing("k0"))?,
        i1_horizon: real(cfg, "i1_horizon")?,
    };
    let o = run_nonosc(&spec)?;
    let mut rep = base_report("nonosc", cfg)?;
    if variant == NonoscVariant::HighDim {
        rep.scalar("slope", o.slope);
        rep.scalar("expected_slope", o.expected_slope);
        rep.scalar("edge_ratio", o.edge_ratio);
        rep.check("decay_rate", (o.slope - o.expected_slope).abs() <= real(cfg, "slope_tol")?);
        let mut fit = Table::new(&["t", "forcing_norm"]);
        for &(t, v) in &o.fit {
            fit.push(vec![t, v]);
        }
        rep.tables.insert("fit".into(), fit);
    } else {
        rep.flag("i1_above_lower", o.i1 >= o.i1_lower);
    }
    rep.scalar("c_phi", o.c_phi);
    rep.scalar("floor_target", o.floor_target);
    rep.scalar("tail_min", o.tail_min);
    rep.scalar("tail_trend", o.tail_trend);
    rep.scalar("i1", o.i1);
    rep.scalar("i1_lower", o.i1_lower);
    rep.check("tail_floor", o.tail_min > 0.0);
    rep.flag("tail_above_target", o.tail_min >= o.floor_target);
    let mut tail = Table::new(&["t", "low_block_sup"]);
    for &(t, v) in &o.tail {
        tail.push(vec![t, v]);
    }
    rep.tables.insert("tail".into(), tail);
    rep.norms.extend(o.profiles.iter().cloned());
    Ok(rep)
}

fn bilinear(cfg: &Config) -> Result<Report> {
    keys(cfg, &["samples", "coarse_2d", "coarse_3d", "interval", "time_samples", "max_radius", "n_scale", "drift_tol"])?;
    let spec = BilinearSpec {
        samples: count(cfg, "samples")?,
        seed: seed(cfg)?,
        coarse_2d: count(cfg, "coarse_2d")?,
        coarse_3d: count(cfg, "coarse_3d")?,
        length: real(cfg, "length")?,
        interval: real(cfg, "interval")?,
        time_samples: count(cfg, "time_samples")?,
        max_radius: real(cfg, "max_radius")?,
        n_scale: real(cfg, "n_scale")?,
    };
    let o = bilinear_ratio_suite(&spec)?;
    let tol = real(cfg, "drift_tol")?;
    let mut rep = base_report("bilinear", cfg)?;
    let mut cols = vec!["sample".to_string()];
    for s in &o.suites {
        cols.push(format!("{}_coarse", s.name));
        cols.push(format!("{}_fine", s.name));
        rep.scalar(format!("max[{}]", s.name), s.max_coarse);
        rep.scalar(format!("max_refined[{}]", s.name), s.max_fine);
        rep.scalar(format!("drift[{}]", s.name), s.drift);
        rep.check(format!("finite[{}]", s.name), s.finite());
        rep.check(format!("stable[{}]", s.name), s.stable(tol));
    }
    let mut table = Table { columns: cols, rows: Vec::new() };
    for i in 0..spec.samples {
        let mut row = vec![i as f64];
        for s in &o.suites {
            row.push(s.coarse[i]);
            row.push(s.fine[i]);
        }
        table.push(row);
    }
    rep.scalar("paraproduct_residual", o.paraproduct_residual);
    rep.check("paraproduct_identity", o.paraproduct_residual < 1e-10);
    rep.tables.insert("ratios".into(), table);
    Ok(rep)
}

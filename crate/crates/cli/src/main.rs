use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use nsforce::config::Config;
use nsforce::experiments::{export_report, run_experiment, Report};
use nsforce::Error;

/// Forced Navier–Stokes norm-oscillation experiments.
#[derive(Parser, Debug)]
#[command(name = "nsforce", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// key = value configuration file; defaults to the built-in config of the subcommand
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the JSON/CSV report (created if absent)
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Random seed (overrides `seed`)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Grid, e.g. `64` or `256,32,32` (overrides `grid`)
    #[arg(long)]
    grid: Option<String>,
    /// Override one config entry; repeatable
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Besov norm of a snapshot or a random field
    Norms(Common),
    /// Slope fit for the modulated-bump norms
    LemmaCos {
        #[command(flatten)]
        common: Common,
        /// Regularity index (overrides `s`)
        #[arg(long, allow_hyphen_values = true)]
        s: Option<String>,
        /// Integrability index, `inf` allowed (overrides `p`)
        #[arg(long)]
        p: Option<String>,
    },
    /// Lower-bound constant ĉ_* and its refinement drift
    Cstar(Common),
    /// Leray projection of a snapshot or random field
    Project(Common),
    /// Mild solver runs: cross_oracle, picard_gate or second_iteration
    Simulate(Common),
    /// Multi-cycle norm oscillation run
    Oscillate(Common),
    /// Decaying forcing in the stable regime p < n
    Stability(Common),
    /// Non-oscillating forcings
    Nonosc(Common),
    /// Bilinear estimate ratio suites
    Bilinear(Common),
    /// Print the effective configuration in canonical form
    DumpConfig {
        #[command(flatten)]
        common: Common,
        /// Subcommand whose built-in config is used when --config is absent
        #[arg(default_value = "oscillate")]
        experiment: String,
    },
}

fn builtin(name: &str) -> Option<&'static str> {
    Some(match name {
        "norms" => include_str!("../../../configs/norms.cfg"),
        "lemma-cos" => include_str!("../../../configs/lemma_cos.cfg"),
        "cstar" => include_str!("../../../configs/cstar.cfg"),
        "project" => include_str!("../../../configs/project.cfg"),
        "simulate" => include_str!("../../../configs/cross_oracle_2d.cfg"),
        "oscillate" => include_str!("../../../configs/osc2d.cfg"),
        "stability" => include_str!("../../../configs/stability.cfg"),
        "nonosc" => include_str!("../../../configs/nonosc.cfg"),
        "bilinear" => include_str!("../../../configs/bilinear.cfg"),
        _ => return None,
    })
}

/// Configuration problems surface as usage errors.
struct Usage(anyhow::Error);

fn load(name: &str, c: &Common, extra: &[(&str, Option<&String>)]) -> Result<Config, Usage> {
    let mut cfg = match &c.config {
        Some(path) => Config::load(path).with_context(|| format!("reading {}", path.display())),
        None => match builtin(name) {
            Some(text) => Config::parse(text).context("built-in config"),
            None => Err(anyhow::anyhow!("unknown experiment `{name}`")),
        },
    }
    .map_err(Usage)?;
    if let Some(seed) = c.seed {
        cfg.set("seed", seed);
    }
    if let Some(g) = &c.grid {
        cfg.set("grid", g);
    }
    for (key, v) in extra {
        if let Some(v) = v {
            cfg.set(key, v);
        }
    }
    for o in &c.overrides {
        cfg.apply_override(o).with_context(|| format!("--override {o}")).map_err(Usage)?;
    }
    Ok(cfg)
}

fn summary(rep: &Report, files: &[PathBuf]) {
    for (k, v) in &rep.scalars {
        println!("{k} = {v:.6e}");
    }
    for (k, v) in &rep.flags {
        println!("flag {k}: {v}");
    }
    for (k, v) in &rep.checks {
        println!("check {k}: {}", if *v { "pass" } else { "FAIL" });
    }
    if let Some(dir) = files.first().and_then(|p| p.parent()) {
        println!("wrote {} files to {}", files.len(), dir.display());
    }
}

fn is_usage(e: &Error) -> bool {
    matches!(e, Error::Config { .. } | Error::InvalidArgument(_) | Error::Resolution { .. } | Error::InvalidGrid(_))
}

fn run(name: &str, c: &Common, extra: &[(&str, Option<&String>)]) -> ExitCode {
    let cfg = match load(name, c, extra) {
        Ok(cfg) => cfg,
        Err(Usage(e)) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let out: &Path = &c.out;
    let rep = match run_experiment(name, &cfg, Some(out)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if is_usage(&e) { 2 } else { 1 });
        }
    };
    let files = match export_report(&rep, out) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: writing report: {e}");
            return ExitCode::from(1);
        }
    };
    summary(&rep, &files);
    if rep.passed() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed checks: {}", rep.failures().join(", "));
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Norms(c) => run("norms", c, &[]),
        Command::LemmaCos { common, s, p } => run("lemma-cos", common, &[("s", s.as_ref()), ("p", p.as_ref())]),
        Command::Cstar(c) => run("cstar", c, &[]),
        Command::Project(c) => run("project", c, &[]),
        Command::Simulate(c) => run("simulate", c, &[]),
        Command::Oscillate(c) => run("oscillate", c, &[]),
        Command::Stability(c) => run("stability", c, &[]),
        Command::Nonosc(c) => run("nonosc", c, &[]),
        Command::Bilinear(c) => run("bilinear", c, &[]),
        Command::DumpConfig { common, experiment } => match load(experiment, common, &[]) {
            Ok(cfg) => {
                print!("{}", cfg.dump());
                ExitCode::SUCCESS
            }
            Err(Usage(e)) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}

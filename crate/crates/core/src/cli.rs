//! Command-line front end. Each subcommand reads an [`ExperimentConfig`]
//! (TOML file plus flag overrides), computes in memory, and writes CSV/JSON
//! artifacts with a [`RunManifest`] into `<out>/<subcommand>/`.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 usage or
//! configuration error, 3 computation error.

use crate::brownian::{clt_error, fdd_compare, modulus_statistics, simulate_paths, HeatKernel};
use crate::config::{ExperimentConfig, ManifoldSpec, MixingMethod, SpectrumMethod};
use crate::error::{Error, Result};
use crate::geometry::flat::FlatTorus;
use crate::geometry::{Manifold, Point};
use crate::kernels::{holding_probability, KernelKind, WalkConfig, Walker};
use crate::montecarlo::{
    excursion_probability, fit_excursion, fit_mixing_rate, run_chain_with, tv_empirical, tv_exact_curve, FitWindow,
    Partition, TvCurve,
};
use crate::output::{write_artifacts, Artifact, RunManifest, Table, Timing, MANIFEST_FILE, TIMING_FILE};
use crate::rng::Substreams;
use crate::row;
use crate::specfun::{gamma_d, gamma_floor, gamma_quadrature_oracle, gamma_sup_bound, unit_ball_volume};
use crate::spectral::{
    assemble_azimuthal, assemble_operator, eigen_decompose, resolvent_gap_torus, sphere_spectrum_zonal,
    torus_spectrum_exact, weyl_constant, weyl_table, Basis, ResolventRegion, SpectrumReport,
};
use crate::stats::linear_fit;
use crate::verify::{self, CheckResult, VerifyOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

/// Overrides the output root when `--out` is not given.
pub const OUTPUT_ENV: &str = "BALLWALK_OUTPUT_DIR";
pub const DEFAULT_OUTPUT: &str = "ballwalk-output";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ballwalk", version, about = "Geodesic ball walks: spectra, mixing and Brownian limits")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ManifoldArg {
    #[value(name = "flat_torus", alias = "flat-torus")]
    FlatTorus,
    #[value(alias = "sphere")]
    Sphere2,
    #[value(name = "revolution_torus", alias = "revolution-torus")]
    RevolutionTorus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    #[value(name = "ball_walk", alias = "ball-walk", alias = "ball")]
    BallWalk,
    Metropolis,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output root; defaults to $BALLWALK_OUTPUT_DIR, then the config, then ./ballwalk-output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub manifold: Option<ManifoldArg>,
    /// Flat torus dimension, sides 2π.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Flat torus side lengths.
    #[arg(long, global = true, value_delimiter = ',')]
    pub lengths: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub major: Option<f64>,
    #[arg(long, global = true)]
    pub minor: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub kind: Option<KindArg>,
    /// Step radii, comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub h: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Tabulate Γ_d against its quadrature oracle.
    Gamma,
    /// Ball volumes, curvature and holding probabilities at sample points.
    Geometry,
    /// One chain trajectory per h.
    Walk {
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Discretized spectrum and the eigenvalue rate.
    Spectrum {
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Eigenvalue counts against the phase-space volume.
    Weyl,
    /// Resolvent differences on a flat torus.
    Resolvent,
    /// Total-variation decay and the fitted mixing rate.
    Mixing {
        #[arg(long, value_enum)]
        method: Option<MixingArg>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Excursion probabilities against ε²/δ.
    Excursion {
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Chain powers against the heat semigroup on eigenfunctions.
    Clt,
    /// Rescaled sample paths at fixed times.
    Paths {
        #[arg(long)]
        count: Option<usize>,
    },
    /// Finite-dimensional distributions against the heat kernel.
    Fdd {
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Modulus-of-continuity exceedance fractions.
    Modulus {
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Run the acceptance checks.
    Verify {
        /// Criterion numbers, comma-separated (default all).
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<usize>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Grid,
    Cells,
    Zonal,
    Azimuthal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MixingArg {
    Exact,
    Empirical,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gamma => "gamma",
            Command::Geometry => "geometry",
            Command::Walk { .. } => "walk",
            Command::Spectrum { .. } => "spectrum",
            Command::Weyl => "weyl",
            Command::Resolvent => "resolvent",
            Command::Mixing { .. } => "mixing",
            Command::Excursion { .. } => "excursion",
            Command::Clt => "clt",
            Command::Paths { .. } => "paths",
            Command::Fdd { .. } => "fdd",
            Command::Modulus { .. } => "modulus",
            Command::Verify { .. } => "verify",
        }
    }
}

/// Apply command-line overrides on top of the file configuration.
pub fn apply_overrides(cfg: &mut ExperimentConfig, common: &CommonArgs, cmd: &Command) -> Result<()> {
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(kind) = common.kind {
        cfg.kernel.kind = match kind {
            KindArg::BallWalk => KernelKind::BallWalk,
            KindArg::Metropolis => KernelKind::Metropolis,
        };
    }
    if let Some(h) = &common.h {
        cfg.kernel.h = h.clone();
    }
    let flat_lengths = |current: &ManifoldSpec| -> Result<Vec<f64>> {
        if let Some(l) = &common.lengths {
            return Ok(l.clone());
        }
        if let Some(d) = common.d {
            return Ok(vec![2.0 * PI; d]);
        }
        Ok(match current {
            ManifoldSpec::FlatTorus { lengths } => lengths.clone(),
            _ => vec![2.0 * PI],
        })
    };
    let revolution = |current: &ManifoldSpec| {
        let (r0, r1) = match current {
            ManifoldSpec::RevolutionTorus { major, minor } => (*major, *minor),
            _ => (2.0, 1.0),
        };
        ManifoldSpec::RevolutionTorus { major: common.major.unwrap_or(r0), minor: common.minor.unwrap_or(r1) }
    };
    let target = common.manifold.or(match cfg.manifold {
        _ if common.d.is_some() || common.lengths.is_some() => Some(ManifoldArg::FlatTorus),
        _ if common.major.is_some() || common.minor.is_some() => Some(ManifoldArg::RevolutionTorus),
        _ => None,
    });
    match target {
        Some(ManifoldArg::FlatTorus) => cfg.manifold = ManifoldSpec::FlatTorus { lengths: flat_lengths(&cfg.manifold)? },
        Some(ManifoldArg::Sphere2) => cfg.manifold = ManifoldSpec::Sphere2 {},
        Some(ManifoldArg::RevolutionTorus) => cfg.manifold = revolution(&cfg.manifold),
        None => {}
    }
    let flat_only = common.d.is_some() || common.lengths.is_some();
    let revolution_only = common.major.is_some() || common.minor.is_some();
    if flat_only && !matches!(cfg.manifold, ManifoldSpec::FlatTorus { .. }) {
        return Err(crate::error::invalid("--d", "only applies to a flat torus"));
    }
    if revolution_only && !matches!(cfg.manifold, ManifoldSpec::RevolutionTorus { .. }) {
        return Err(crate::error::invalid("--major", "only applies to a torus of revolution"));
    }
    match cmd {
        Command::Walk { steps: Some(s) } => cfg.walk.steps = *s,
        Command::Spectrum { method, resolution, count } => {
            if let Some(m) = method {
                cfg.spectrum.method = Some(match m {
                    MethodArg::Exact => SpectrumMethod::Exact,
                    MethodArg::Grid => SpectrumMethod::Grid,
                    MethodArg::Cells => SpectrumMethod::Cells,
                    MethodArg::Zonal => SpectrumMethod::Zonal,
                    MethodArg::Azimuthal => SpectrumMethod::Azimuthal,
                });
            }
            if resolution.is_some() {
                cfg.spectrum.resolution = *resolution;
            }
            if let Some(c) = count {
                cfg.spectrum.count = *c;
            }
        }
        Command::Mixing { method, trials } => {
            if let Some(m) = method {
                cfg.mixing.method = Some(match m {
                    MixingArg::Exact => MixingMethod::ExactMatrixPower,
                    MixingArg::Empirical => MixingMethod::BinnedEmpirical,
                });
            }
            if let Some(t) = trials {
                cfg.mixing.trials = *t;
            }
        }
        Command::Excursion { trials: Some(t) } => cfg.excursion.trials = *t,
        Command::Paths { count: Some(c) } => cfg.paths.count = *c,
        Command::Fdd { paths: Some(p) } => cfg.fdd.paths = *p,
        Command::Modulus { paths: Some(p) } => cfg.modulus.paths = *p,
        Command::Verify { criteria: Some(c) } => cfg.verify.criteria = c.clone(),
        _ => {}
    }
    Ok(())
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParameter { .. }
            | Error::DimensionUnsupported(_)
            | Error::Unsupported(_)
            | Error::ForbiddenRegion { .. }
            | Error::InjectivityRadius { .. }
    )
}

/// Results of one subcommand before they are written.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: Value,
    pub checks: Vec<CheckResult>,
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let name = cli.command.name();
    let mut cfg = match &cli.common.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match ExperimentConfig::from_toml(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    return EXIT_USAGE;
                }
            },
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return EXIT_USAGE;
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Err(e) = apply_overrides(&mut cfg, &cli.common, &cli.command) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    let manifold = match cfg.validate() {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let root = cli
        .common
        .out
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    let dir = root.join(name);
    let mut pool = rayon::ThreadPoolBuilder::new();
    match cli.common.workers {
        Some(0) => {
            eprintln!("error: --workers must be at least 1");
            return EXIT_USAGE;
        }
        Some(n) => pool = pool.num_threads(n),
        None => {}
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start workers: {e}");
            return EXIT_COMPUTE;
        }
    };
    let workers = pool.current_num_threads();
    let started = Instant::now();
    let outcome = pool.install(|| execute(&cli.command, &cfg, &manifold));
    let wall = started.elapsed().as_secs_f64();
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error in {name}: {e}");
            return if is_usage_error(&e) { EXIT_USAGE } else { EXIT_COMPUTE };
        }
    };
    let config_toml = cfg.to_toml();
    let mut artifacts = outcome.artifacts;
    artifacts.push(Artifact::text("config.toml", config_toml.clone()));
    artifacts.push(Artifact::json("summary.json", &outcome.summary));
    let failed = outcome.checks.iter().any(|c| c.verdict == verify::Verdict::Fail);
    let manifest = RunManifest::new(name, &config_toml, cfg.seed, outcome.checks, &artifacts);
    artifacts.push(Artifact::json(MANIFEST_FILE, &manifest));
    artifacts.push(Artifact::json(TIMING_FILE, &Timing { wall_time_seconds: wall, workers }));
    if let Err(e) = write_artifacts(&dir, &artifacts) {
        eprintln!("error: writing artifacts to {}: {e}", dir.display());
        return EXIT_COMPUTE;
    }
    println!("{name}: wrote {} artifacts to {} in {wall:.2} s", artifacts.len(), dir.display());
    if failed {
        EXIT_VERIFY
    } else {
        EXIT_OK
    }
}

/// Run one subcommand against a validated configuration.
pub fn execute(cmd: &Command, cfg: &ExperimentConfig, m: &Manifold) -> Result<Outcome> {
    match cmd {
        Command::Gamma => gamma(cfg),
        Command::Geometry => geometry(cfg, m),
        Command::Walk { .. } => walk(cfg, m),
        Command::Spectrum { .. } => spectrum(cfg, m),
        Command::Weyl => weyl(cfg, m),
        Command::Resolvent => resolvent(cfg, m),
        Command::Mixing { .. } => mixing(cfg, m),
        Command::Excursion { .. } => excursion(cfg, m),
        Command::Clt => clt(cfg, m),
        Command::Paths { .. } => paths(cfg, m),
        Command::Fdd { .. } => fdd(cfg, m),
        Command::Modulus { .. } => modulus(cfg, m),
        Command::Verify { .. } => run_verify(cfg),
    }
}

fn default_start(m: &Manifold) -> Point {
    match m {
        Manifold::Sphere2 => Point([0.0, 0.0, 1.0]),
        Manifold::RevolutionTorus(_) => Point([PI, 0.0, 0.0]),
        Manifold::FlatTorus(_) => Point([0.0; 3]),
    }
}

fn start_point(m: &Manifold, start: Option<[f64; 3]>) -> Result<Point> {
    match start {
        None => Ok(default_start(m)),
        Some(c) => {
            if matches!(m, Manifold::Sphere2) && c.iter().map(|v| v * v).sum::<f64>() < 1e-12 {
                return Err(crate::error::invalid("start", "a point on S² needs a nonzero vector"));
            }
            Ok(m.normalize(Point(c)))
        }
    }
}

fn partition(m: &Manifold, cells: usize, bands: usize, sectors: usize) -> Partition {
    match m {
        Manifold::FlatTorus(_) => Partition::FlatGrid { cells },
        Manifold::Sphere2 => Partition::SphereGrid { bands, sectors },
        Manifold::RevolutionTorus(_) => Partition::RevolutionGrid { bands, sectors },
    }
}

fn flat_torus(m: &Manifold, what: &str) -> Result<FlatTorus> {
    match m {
        Manifold::FlatTorus(t) => Ok(t.clone()),
        _ => Err(Error::Unsupported(format!("{what} is implemented on flat tori only"))),
    }
}

/// Walker for Monte Carlo runs: tabulated ball volumes on a torus of
/// revolution, exact elsewhere.
fn mc_walker<'a>(m: &'a Manifold, h: f64, cfg: &ExperimentConfig) -> Result<Walker<'a>> {
    Walker::with_table(m, WalkConfig::new(m, h, cfg.seed, cfg.kernel.kind)?, 1e-10)
}

fn h_label(i: usize) -> String {
    format!("h{i}")
}

fn coords(p: Point) -> [f64; 3] {
    p.0
}

fn gamma(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = &cfg.gamma;
    let mut table = Table::new(&["d", "s", "gamma", "oracle", "abs_error"]);
    let mut per_dim = Vec::new();
    for &d in &g.dims {
        let mut worst: f64 = 0.0;
        for i in 0..g.points {
            let s = (g.s_min.ln() + (g.s_max.ln() - g.s_min.ln()) * i as f64 / (g.points - 1) as f64).exp();
            let (a, b) = (gamma_d(d, s)?, gamma_quadrature_oracle(d, s)?);
            worst = worst.max((a - b).abs());
            table.push(row![d, s, a, b, (a - b).abs()]);
        }
        let floor = gamma_floor(d)?;
        per_dim.push(json!({
            "d": d,
            "slope_at_zero": (gamma_d(d, 1e-6)? - 1.0) / 1e-6,
            "expected_slope": -1.0 / (2.0 * (d as f64 + 2.0)),
            "floor": floor.gamma0,
            "floor_at": floor.s_at,
            "max_oracle_error": worst,
        }));
    }
    Ok(Outcome {
        artifacts: vec![Artifact::csv("gamma.csv", &table)],
        summary: json!({ "dimensions": per_dim }),
        checks: vec![],
    })
}

fn geometry(cfg: &ExperimentConfig, m: &Manifold) -> Result<Outcome> {
    let d = m.dim();
    let mut rng = Substreams::new(cfg.seed).child("geometry").stream(0);
    let pts: Vec<Point> = (0..cfg.geometry.points).map(|_| m.uniform_point(&mut rng)).collect();
    let mut table = Table::new(&[
        "point", "x0", "x1", "x2", "h", "ball_volume", "euclidean_volume", "scalar_curvature", "expansion", "holding",
    ]);
    let mut worst = Vec::new();
    for &h in &cfg.kernel.h {
        let euclid = unit_ball_volume(d) * h.powi(d as i32);
        let mut dev: f64 = 0.0;
        for (i, &x) in pts.iter().enumerate() {
            let vol = m.ball_volume(x, h)?;
            let s = m.scalar_curvature(x);
            let expansion = euclid * (1.0 - s * h * h / (6.0 * (d as f64 + 2.0)));
            let hold = if cfg.kernel.kind == KernelKind::Metropolis && !m.is_homogeneous() {
                holding_probability(m, h, x)?
            } else {
                0.0
            };
            dev = dev.max((vol / expansion - 1.0).abs());
            let c = coords(x);
            table.push(row![i, c[0], c[1], c[2], h, vol, euclid, s, expansion, hold]);
        }
        worst.push(json!({ "h": h, "max_relative_deviation_from_expansion": dev }));
    }
    Ok(Outcome {
        artifacts: vec![Artifact::csv("geometry.csv", &table)],
        summary: json!({
            "manifold": m.name(),
            "dimension": d,
            "volume": m.volume(),
            "injectivity_bound": m.injectivity_bound(),
            "expansion": worst,
        }),
        checks: vec![],
    })
}

fn walk(cfg: &ExperimentConfig, m: &Manifold) -> Result<Outcome> {
    let x0 = start_point(m, cfg.walk.start)?;
    let streams = Substreams::new(cfg.seed).child("walk");
    let mut table = Table::new(&["h", "step", "x0", "x1", "x2", "held"]);
    let mut rates = Vec::new();
    for (i, &h) in cfg.kernel.h.iter().enumerate() {
        let walker = Walker::new(m, WalkConfig::new(m, h, cfg.seed, cfg.kernel.kind)?)?;
        let trace = run_chain_with(&walker, x0, cfg.walk.steps, cfg.walk.thin, &mut streams.stream(i as u64))?;
        for (k, &p) in trace.states.iter().enumerate() {
            let step = k * trace.thin;
            let held = step > 0 && trace.held[step - 1];
            let c = coords(p);
            table.push(row![h, step, c[0], c[1], c[2], held]);
        }
        let held = trace.held.iter().filter(|&&b| b).count();
        rates.push(json!({
            "h": h,
            "steps": trace.held.len(),
            "acceptance_rate": 1.0 - held as f64 / trace.held.len().max(1) as f64,
        }));
    }
    Ok(Outcome {
        artifacts: vec![Artifact::csv("walk.csv", &table)],
        summary: json!({ "manifold": m.name(), "kind": cfg.kernel.kind, "start": x0, "runs": rates }),
        checks: vec![],
    })
}

/// The spectrum of one `h` with the configured method.
pub fn spectrum_report(cfg: &ExperimentConfig, m: &Manifold, h: f64) -> Result<SpectrumReport> {
    let p = &cfg.spectrum;
    let kind = cfg.kernel.kind;
    let method = p.method.unwrap_or(match m {
        Manifold::RevolutionTorus(_) => SpectrumMethod::Azimuthal,
        _ => SpectrumMethod::Exact,
    });
    let unsupported = || Err(Error::Unsupported(format!("spectrum method {method:?} on {}", m.name())));
    match (method, m) {
        (SpectrumMethod::Exact, Manifold::FlatTorus(t)) => {
            let lambda_max = t.modes(p.count + 1).last().map_or(1.0, |md| md.lambda);
            torus_spectrum_exact(t, h, lambda_max)
        }
        (SpectrumMethod::Exact, Manifold::Sphere2) => {
            let l_max = ((p.count as f64).sqrt().ceil() as usize).max(1);
            sphere_spectrum_zonal(h, l_max)
        }
        (SpectrumMethod::Grid, Manifold::FlatTorus(t)) if t.dim() <= 2 => {
            let n = p.resolution.unwrap_or(if t.dim() == 1 { 256 } else { 48 });
            eigen_decompose(&[assemble_operator(m, h, kind, Basis::Grid { n })?], false)
        }
        (SpectrumMethod::Cells, Manifold::FlatTorus(t)) if t.dim() == 1 => {
            let n = p.resolution.unwrap_or(1024);
            eigen_decompose(&[assemble_operator(m, h, kind, Basis::Cells { n })?], false)
        }
        (SpectrumMethod::Zonal, Manifold::Sphere2) => {
            let n = p.resolution.unwrap_or(32);
            eigen_decompose(&[assemble_operator(m, h, kind, Basis::Zonal { n })?], false)
        }
        (SpectrumMethod::Azimuthal, Manifold::RevolutionTorus(_)) => {
            let n = p.resolution.unwrap_or(64);
            let modes: Vec<usize> = (0..=p.modes).collect();
            eigen_decompose(&assemble_azimuthal(m, h, kind, n, &modes)?, false)
        }
        _ => unsupported(),
    }
}

/// Log-log slope of a quantity against `h`, when at least two radii are given.
fn rate_in_h(hs: &[f64], values: &[f64]) -> Option<f64> {
    if hs.len() < 2 || values.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let x: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    linear_fit(&x, &y).ok().map(|f| f.slope)
}

fn spectrum(cfg: &ExperimentConfig, m: &Manifold) -> Result<Outcome> {
    let mut table = Table::new(&["h", "k", "mu", "tau", "lambda_ref", "gap"]);
    let mut runs = Vec::new();
    let mut gaps: Vec<Vec<f64>> = Vec::new();
    for &h in &cfg.kernel.h {
        let r = spectrum_report(cfg, m, h)?;
        let rows = cfg.spectrum.count.min(r.mu.len());
        for k in 0..rows {
            let lam = r.lambda_ref.get(k).copied().unwrap_or(f64::NAN);
            let gap = r.gap.get(k).copied().unwrap_or(f64::NAN);
            table.push(row![h, k, r.mu[k], r.tau[k], lam, gap]);
        }
        gaps.push((1..=3).map(|k| r.gap.get(k).copied().unwrap_or(f64::NAN)).collect());
        runs.push(json!({
            "h": h,
            "basis": r.basis,
            "eigenvalues": r.mu.len(),
            "floor": r.floor(),
            "complete_above": r.complete_above,
            "asymmetry": r.asymmetry,
        }));
    }
    let rates: Vec<Value> = (0..3)
        .map(|k| {
            let v: Vec<f64> = gaps.iter().map(|g| g[k]).collect();
            json!({ "k": k + 1, "gap_exponent": rate_in_h(&cfg.kernel.h, &v) })
        })
        .collect();
    Ok(Outcome {
        artifacts: vec![Artifact::csv("spectrum.csv", &table)],
        summary: json!({ "manifold": m.name(), "kind": cfg.kernel.kind, "runs": runs, "rates": rates }),
        checks: vec![],
    })
}

fn weyl(cfg: &ExperimentConfig, m: &Manifold) -> Result<Outcome> {
    let t = flat_torus(m, "the Weyl count")?;
    let d = t.dim();
    let p = &cfg.weyl;
    let tau_max = p.taus.iter().cloned().fold(0.0, f64::max);
    let mut table = Table::new(&["h", "tau", "count", "phase_volume", "scaled_error", "bound"]);
    let mut constants = Vec::new();
    for &h in &cfg.kernel.h {
        if tau_max > (1.0 - p.delta) / (h * h) {
            return Err(crate::error::invalid("weyl.taus", format!("τ must not exceed (1 − δ)/h² at h = {h}")));
        }
        // Smallest s beyond which |Γ_d| stays below the lowest threshold.
        let lo = 1.0 - tau_max * h * h;
        let mut s = 1.0;
        while gamma_sup_bound(d, s)? >= lo {
            s *= 1.25;
        }
        let lambda_max = s / (h * h);
        let expected = t.volume() * unit_ball_volume(d) * lambda_max.powf(d as f64 / 2.0) / (2.0 * PI).powi(d as i32);
        if expected > 2e7 {
            return Err(Error::Resource(format!("about {expected:.1e} Fourier modes needed at h = {h}")));
        }
        let r = torus_spectrum_exact(&t, h, lambda_max)?;
        let rows = weyl_table(&r, m, &p.taus, p.delta)?;
        let c = weyl_constant(&rows);
        for row in &rows {
            let bound = c * (1.0 + row.tau).powf((d as f64 - 1.0) / 2.0);
            table.push(row![h, row.tau, row.count, row.phase_volume, row.scaled_error, bound]);
        }
        constants.push(c);
    }
    let ratios: Vec<f64> = constants.windows(2).map(|w| w[1] / w[0]).collect();
    Ok(Outcome {
        artifacts: vec![Artifact::csv("weyl.csv", &table)],
        summary: json!({ "dimension": d, "h": cfg.kernel.h, "constants": constants, "constant_ratios": ratios }),
        checks: vec![],
    })
}

fn resolvent(cfg: &ExperimentConfig, m: &Manifold) -> Result<Outcome> {
    let t = flat_torus(m, "the resolvent comparison")?;
    let p = &cfg.resolvent;
    let region = ResolventRegion { epsilon: p.epsilon, cone_start: p.cone_start };
    let mut table = Table::new(&["h", "re", "im", "gap", "sup_modes", "tail_bound", "modes"]);
    let mut per_z = Vec::new();
    for &[re, im] in &p.z {
        let mut values = Vec::new();
        for &h in &cfg.kernel.h {
            let g = resolvent_gap_torus(&t, h, (re, im), region)?;
            table.push(row![h, re, im, g.value, g.sup_modes, g.tail_bound, g.modes]);
            values.push(g.value);
        }
        per_z.push(json!({ "z": [re, im], "gaps": values, "exponent": rate_in_h(&cfg.kernel.h, &values) }));
    }
    Ok(Outcome {
        artifacts: vec![Artifact::csv("resolvent.csv", &table)],
        summary: json!({ "region": region, "points": per_z }),
        checks: vec![],
    })
}

fn mixing(cfg: &ExperimentConfig, m: &Manifold) -> Result<Outcome> {
    let p = &cfg.mixing;
    let circle = matches!(m, Manifold::FlatTorus(t) if t.dim() == 1);
    let method = p.method.unwrap_or(if circle { MixingMethod::ExactMatrixPower } else { MixingMethod::BinnedEmpirical });
    if method == MixingMethod::ExactMatrixPower && !circle {
        return Err(Error::Unsupported("exact matrix powers need a one-dimensional flat torus".into()));
    }
    let lambda1 = m.reference_spectrum(2)?[1].lambda;
    let target = lambda1 / (2.0 * (m.dim() as f64 + 2.0));
    let x0 = start_point(m, p.start)?;
    let streams = Substreams::new(cfg.seed).child("mixing");
    let mut table = Table::new(&["h", "n", "tv", "half_width"]);
    let mut reports = Vec::new();
    for (i, &h) in cfg.kernel.h.iter().enumerate() {
        let (curve, window): (TvCurve, FitWindow) = match method {
            MixingMethod::ExactMatrixPower => {
                let op = assemble_operator(m, h, cfg.kernel.kind, Basis::Cells { n: p.resolution })?;
                (tv_exact_curve(&op, &[0], p.n_max)?, FitWindow::default())
            }
            MixingMethod::BinnedEmpirical => {
                let walker = mc_walker(m, h, cfg)?;
                let ns: Vec<usize> = (0..=p.steps).step_by(p.stride).collect();
                let part = partition(m, p.cells, p.bands, p.sectors);
                let c = tv_empirical(&walker, x0, &ns, p.trials, part, &streams.child(&h_label(i)))?;
                let w = FitWindow { lo: 5.0 * c.noise_floor, hi: 0.5 };
                (c, w)
            }
        };
        for pt in curve.points.iter().filter(|pt| pt.n % p.stride == 0) {
            table.push(row![h, pt.n, pt.tv, pt.half_width.unwrap_or(0.0)]);
        }
        let report = fit_mixing_rate(&curve, h, target, window)?;
        reports.push(json!({ "report": report, "noise_floor": curve.noise_floor, "method": curve.method }));
    }
    Ok(Outcome {
        artifacts: vec![Artifact::csv("mixing.csv", &table)],
        summary: json!({
            "manifold": m.name(),
            "kind": cfg.kernel.kind,
            "lambda1": lambda1,
            "target_rate": target,
            "convention": crate::montecarlo::TV_CONVENTION,
            "runs": reports,
        }),
        checks: vec![],
    })
}

fn excursion(cfg: &ExperimentConfig, m: &Manifold) -> Result<Outcome> {
    let p = &cfg.excursion;
    let x0 = default_start(m);
    let root = Substreams::new(cfg.seed).child("excursion");
    let mut table = Table::new(&[
        "h", "epsilon", "delta", "ratio", "steps", "trials", "exceedances", "probability", "half_width", "upper_bound",
    ]);
    let mut fits = Vec::new();
    for (i, &h) in cfg.kernel.h.iter().enumerate() {
        let walker = mc_walker(m, h, cfg)?;
        let streams = root.child(&h_label(i));
        let mut est = Vec::new();
        for (j, &ratio) in p.ratios.iter().enumerate() {
            let delta = p.epsilon * p.epsilon / ratio;
            let e = excursion_probability(&walker, x0, p.epsilon, delta, p.trials, &streams.child(&j.to_string()))?;
            table.push(row![
                h, e.epsilon, e.delta, ratio, e.steps, e.trials, e.exceedances, e.probability, e.half_width, e.upper_bound
            ]);
            est.push(e);
        }
        fits.push(match fit_excursion(&est) {
            Ok(f) => json!({ "h": h, "fit": f }),
            Err(e) => json!({ "h": h, "fit": null, "reason": e.to_string() }),
        });
    }
    Ok(Outcome {
        artifacts: vec![Artifact::csv("excursion.csv", &table)],
        summary: json!({ "manifold": m.name(), "start": x0, "fits": fits }),
        checks: vec![],
    })
}

fn clt(cfg: &ExperimentConfig, m: &Manifold) -> Result<Outcome> {
    let p = &cfg.clt;
    let mut table = Table::new(&["h", "t", "index", "steps", "lambda", "semigroup", "chain", "error"]);
    let mut per_index = Vec::new();
    for &j in &p.indices {
        let mut errors = Vec::new();
        for &h in &cfg.kernel.h {
            let e = clt_error(m, h, p.t, j)?;
            table.push(row![h, e.t, e.index, e.steps, e.lambda, e.semigroup, e.chain, e.error]);
            errors.push(e.error);
        }
        per_index.push(json!({ "index": j, "errors": errors, "exponent": rate_in_h(&cfg.kernel.h, &errors) }));
    }
    Ok(Outcome {
        artifacts: vec![Artifact::csv("clt.csv", &table)],
        summary: json!({ "manifold": m.name(), "t": p.t, "h": cfg.kernel.h, "indices": per_index }),
        checks: vec![],
    })
}

fn paths(cfg: &ExperimentConfig, m: &Manifold) -> Result<Outcome> {
    let p = &cfg.paths;
    let x0 = start_point(m, p.start)?;
    let root = Substreams::new(cfg.seed).child("paths");
    let mut table = Table::new(&["h", "path", "time", "x0", "x1", "x2"]);
    let mut runs = Vec::new();
    for (i, &h) in cfg.kernel.h.iter().enumerate() {
        let walker = mc_walker(m, h, cfg)?;
        let ens = simulate_paths(&walker, x0, &p.times, p.count, false, &root.child(&h_label(i)))?;
        for (k, sample) in ens.samples.iter().enumerate() {
            for (&t, &pt) in ens.times.iter().zip(sample) {
                let c = coords(pt);
                table.push(row![h, k, t, c[0], c[1], c[2]]);
            }
        }
        runs.push(json!({ "h": h, "dt": ens.dt, "paths": ens.samples.len() }));
    }
    Ok(Outcome {
        artifacts: vec![Artifact::csv("paths.csv", &table)],
        summary: json!({ "manifold": m.name(), "start": x0, "times": p.times, "runs": runs }),
        checks: vec![],
    })
}

fn fdd(cfg: &ExperimentConfig, m: &Manifold) -> Result<Outcome> {
    let p = &cfg.fdd;
    let x0 = start_point(m, p.start)?;
    let t_min = match p.times.as_slice() {
        [t] => *t,
        [a, b] => a.min(b - a),
        _ => unreachable!("validated"),
    };
    let heat = HeatKernel::new(m, t_min)?;
    let part = partition(m, p.cells, p.bands, p.sectors);
    let root = Substreams::new(cfg.seed).child("fdd");
    let mut table = Table::new(&["h", "cell", "observed", "expected"]);
    let mut runs = Vec::new();
    for (i, &h) in cfg.kernel.h.iter().enumerate() {
        let walker = mc_walker(m, h, cfg)?;
        let ens = simulate_paths(&walker, x0, &p.times, p.paths, false, &root.child(&h_label(i)))?;
        let rep = fdd_compare(&ens, m, &heat, part, p.quad_nodes)?;
        for (c, (&o, &e)) in rep.observed.iter().zip(&rep.expected).enumerate() {
            table.push(row![h, c, o, e]);
        }
        runs.push(json!({
            "h": h,
            "chi_square": rep.chi_square,
            "discrepancy": rep.discrepancy,
            "max_discrepancy": rep.max_discrepancy,
        }));
    }
    Ok(Outcome {
        artifacts: vec![Artifact::csv("fdd.csv", &table)],
        summary: json!({ "manifold": m.name(), "times": p.times, "partition": part, "runs": runs }),
        checks: vec![],
    })
}

fn modulus(cfg: &ExperimentConfig, m: &Manifold) -> Result<Outcome> {
    let p = &cfg.modulus;
    let x0 = start_point(m, p.start)?;
    let root = Substreams::new(cfg.seed).child("modulus");
    let mut table = Table::new(&["h", "horizon", "delta", "epsilon", "paths", "fraction", "exact_zero"]);
    let mut runs = Vec::new();
    for (i, &h) in cfg.kernel.h.iter().enumerate() {
        let walker = mc_walker(m, h, cfg)?;
        let ens = simulate_paths(&walker, x0, &[p.horizon], p.paths, true, &root.child(&h_label(i)))?;
        let mut fractions = Vec::new();
        for e in modulus_statistics(&ens, m, p.horizon, &p.deltas, p.epsilon)? {
            table.push(row![h, e.horizon, e.delta, e.epsilon, e.paths, e.fraction, e.exact_zero]);
            fractions.push(e.fraction);
        }
        let monotone = fractions.windows(2).all(|w| w[1] >= w[0]);
        runs.push(json!({ "h": h, "fractions": fractions, "nondecreasing_in_delta": monotone }));
    }
    Ok(Outcome {
        artifacts: vec![Artifact::csv("modulus.csv", &table)],
        summary: json!({ "manifold": m.name(), "deltas": p.deltas, "runs": runs }),
        checks: vec![],
    })
}

fn run_verify(cfg: &ExperimentConfig) -> Result<Outcome> {
    let opts = VerifyOptions { seed: cfg.seed };
    let mut checks = Vec::with_capacity(verify::CRITERIA);
    for id in 1..=verify::CRITERIA {
        let c = if cfg.verify.criteria.contains(&id) {
            let c = verify::run_check(id, &opts)?;
            println!("{}", c.line());
            c
        } else {
            verify::skipped(id)?
        };
        checks.push(c);
    }
    let mut table = Table::new(&["criterion", "name", "verdict", "detail"]);
    for c in &checks {
        let verdict = serde_json::to_value(c.verdict).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        table.push(row![c.id, c.name, verdict, c.detail.clone()]);
    }
    let passed = checks.iter().filter(|c| c.passed()).count();
    let failed = checks.iter().filter(|c| c.verdict == verify::Verdict::Fail).count();
    println!("verify: {passed} passed, {failed} failed, {} skipped", checks.len() - passed - failed);
    Ok(Outcome {
        artifacts: vec![Artifact::csv("verify.csv", &table)],
        summary: json!({ "seed": cfg.seed, "passed": passed, "failed": failed, "skipped": checks.len() - passed - failed }),
        checks,
    })
}

//! Experiment configuration. A TOML file with a top-level `seed`, a
//! `[manifold]` and `[kernel]` table, and one table per subcommand. Every
//! table rejects unknown keys and every field has a default, so an empty file
//! is a valid configuration.

use crate::error::{invalid, Error, Result};
use crate::geometry::Manifold;
use crate::kernels::KernelKind;
use crate::verify::{CRITERIA, DEFAULT_SEED};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub manifold: ManifoldSpec,
    pub kernel: KernelSpec,
    pub gamma: GammaParams,
    pub geometry: GeometryParams,
    pub walk: WalkParams,
    pub spectrum: SpectrumParams,
    pub weyl: WeylParams,
    pub resolvent: ResolventParams,
    pub mixing: MixingParams,
    pub excursion: ExcursionParams,
    pub clt: CltParams,
    pub paths: PathsParams,
    pub fdd: FddParams,
    pub modulus: ModulusParams,
    pub verify: VerifyParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            output_dir: None,
            manifold: ManifoldSpec::default(),
            kernel: KernelSpec::default(),
            gamma: GammaParams::default(),
            geometry: GeometryParams::default(),
            walk: WalkParams::default(),
            spectrum: SpectrumParams::default(),
            weyl: WeylParams::default(),
            resolvent: ResolventParams::default(),
            mixing: MixingParams::default(),
            excursion: ExcursionParams::default(),
            clt: CltParams::default(),
            paths: PathsParams::default(),
            fdd: FddParams::default(),
            modulus: ModulusParams::default(),
            verify: VerifyParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldSpec {
    FlatTorus {
        lengths: Vec<f64>,
    },
    // A struct variant, so that stray keys are rejected.
    #[serde(alias = "sphere")]
    Sphere2 {},
    RevolutionTorus {
        major: f64,
        minor: f64,
    },
}

impl Default for ManifoldSpec {
    fn default() -> Self {
        ManifoldSpec::FlatTorus { lengths: vec![2.0 * PI] }
    }
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<Manifold> {
        match self {
            ManifoldSpec::FlatTorus { lengths } => Manifold::flat_torus(lengths.clone()),
            ManifoldSpec::Sphere2 {} => Ok(Manifold::sphere2()),
            ManifoldSpec::RevolutionTorus { major, minor } => Manifold::revolution_torus(*major, *minor),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub h: Vec<f64>,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self { kind: KernelKind::Metropolis, h: vec![0.1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GammaParams {
    pub dims: Vec<usize>,
    pub s_min: f64,
    pub s_max: f64,
    pub points: usize,
}

impl Default for GammaParams {
    fn default() -> Self {
        Self { dims: vec![1, 2, 3], s_min: 1e-4, s_max: 1e3, points: 41 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryParams {
    /// Uniformly drawn sample points.
    pub points: usize,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self { points: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkParams {
    pub steps: usize,
    pub thin: usize,
    pub start: Option<[f64; 3]>,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self { steps: 1000, thin: 1, start: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    /// Closed form on flat tori, zonal closed form on S².
    Exact,
    /// Trigonometric Nyström grid (flat, d ≤ 2).
    Grid,
    /// Piecewise-constant cells (flat, d = 1).
    Cells,
    /// Gauss–Legendre nodes in z for the zonal block (S²).
    Zonal,
    /// One block per φ-mode (torus of revolution).
    Azimuthal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumParams {
    /// Defaults by manifold: exact (flat, S²), azimuthal (revolution).
    pub method: Option<SpectrumMethod>,
    /// Nodes per axis; method-dependent default.
    pub resolution: Option<usize>,
    /// Highest φ-mode on a torus of revolution.
    pub modes: usize,
    /// Rows written per h.
    pub count: usize,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self { method: None, resolution: None, modes: 4, count: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeylParams {
    pub delta: f64,
    pub taus: Vec<f64>,
}

impl Default for WeylParams {
    fn default() -> Self {
        Self { delta: 0.1, taus: (0..=6).map(|p| 2f64.powi(p)).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResolventParams {
    /// Points `[re, im]`.
    pub z: Vec<[f64; 2]>,
    pub epsilon: f64,
    pub cone_start: f64,
}

impl Default for ResolventParams {
    fn default() -> Self {
        Self {
            z: vec![[-1.0, 0.0], [-0.25, 0.0], [0.5, 0.0], [2.5, 0.0], [0.5, 2.0]],
            epsilon: 0.25,
            cone_start: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingMethod {
    ExactMatrixPower,
    BinnedEmpirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixingParams {
    /// Exact on the circle, empirical elsewhere, unless set.
    pub method: Option<MixingMethod>,
    /// Cells of the exact operator.
    pub resolution: usize,
    pub n_max: usize,
    pub trials: usize,
    pub steps: usize,
    pub stride: usize,
    /// Partition: cells per flat axis, or bands × sectors on curved surfaces.
    pub cells: usize,
    pub bands: usize,
    pub sectors: usize,
    pub start: Option<[f64; 3]>,
}

impl Default for MixingParams {
    fn default() -> Self {
        Self {
            method: None,
            resolution: 1024,
            n_max: 40_000,
            trials: 100_000,
            steps: 2500,
            stride: 25,
            cells: 8,
            bands: 2,
            sectors: 8,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExcursionParams {
    pub epsilon: f64,
    /// Values of `ε²/δ`.
    pub ratios: Vec<f64>,
    pub trials: usize,
}

impl Default for ExcursionParams {
    fn default() -> Self {
        Self { epsilon: 0.5, ratios: (0..10).map(|i| 0.4 * 10f64.powf(i as f64 / 9.0)).collect(), trials: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CltParams {
    pub t: f64,
    pub indices: Vec<usize>,
}

impl Default for CltParams {
    fn default() -> Self {
        Self { t: 1.0, indices: vec![1, 2, 3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsParams {
    pub times: Vec<f64>,
    pub count: usize,
    pub start: Option<[f64; 3]>,
}

impl Default for PathsParams {
    fn default() -> Self {
        Self { times: vec![0.25, 0.5, 1.0], count: 100, start: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FddParams {
    pub times: Vec<f64>,
    pub paths: usize,
    /// Partition per observation time, as in `[mixing]`.
    pub cells: usize,
    pub bands: usize,
    pub sectors: usize,
    pub quad_nodes: usize,
    pub start: Option<[f64; 3]>,
}

impl Default for FddParams {
    fn default() -> Self {
        Self { times: vec![0.25, 0.5], paths: 100_000, cells: 4, bands: 2, sectors: 2, quad_nodes: 24, start: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulusParams {
    pub horizon: f64,
    pub deltas: Vec<f64>,
    pub epsilon: f64,
    pub paths: usize,
    pub start: Option<[f64; 3]>,
}

impl Default for ModulusParams {
    fn default() -> Self {
        Self { horizon: 1.0, deltas: vec![0.01, 0.02, 0.05, 0.1], epsilon: 0.5, paths: 10_000, start: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyParams {
    /// 1-based criterion numbers to run; the rest are reported as skipped.
    pub criteria: Vec<usize>,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self { criteria: (1..=CRITERIA).collect() }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {v}")))
    }
}

fn nonzero(name: &'static str, v: usize) -> Result<()> {
    if v == 0 {
        Err(invalid(name, "must be at least 1"))
    } else {
        Ok(())
    }
}

fn nonempty<T>(name: &'static str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(invalid(name, "must not be empty"))
    } else {
        Ok(())
    }
}

fn increasing(name: &'static str, v: &[f64]) -> Result<()> {
    nonempty(name, v)?;
    v.iter().try_for_each(|&t| positive(name, t))?;
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(name, "must be strictly increasing"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidParameter {
            name: "config",
            reason: e.to_string().trim_end().to_string(),
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Check every section that does not depend on the subcommand. Called
    /// before any computation.
    pub fn validate(&self) -> Result<Manifold> {
        let m = self.manifold.build()?;
        nonempty("kernel.h", &self.kernel.h)?;
        for &h in &self.kernel.h {
            m.check_radius(h).map_err(|e| invalid("kernel.h", e.to_string()))?;
        }
        let g = &self.gamma;
        nonempty("gamma.dims", &g.dims)?;
        if g.dims.iter().any(|d| !(1..=3).contains(d)) {
            return Err(invalid("gamma.dims", "dimensions must be 1, 2 or 3"));
        }
        positive("gamma.s_min", g.s_min)?;
        if !(g.s_max > g.s_min && g.s_max.is_finite()) {
            return Err(invalid("gamma.s_max", "must exceed gamma.s_min"));
        }
        if g.points < 2 {
            return Err(invalid("gamma.points", "need at least 2"));
        }
        nonzero("geometry.points", self.geometry.points)?;
        nonzero("walk.thin", self.walk.thin)?;
        nonzero("spectrum.count", self.spectrum.count)?;
        if let Some(r) = self.spectrum.resolution {
            if r < 8 || r % 2 == 1 {
                return Err(invalid("spectrum.resolution", "must be even and at least 8"));
            }
        }
        if !(self.weyl.delta > 0.0 && self.weyl.delta < 1.0) {
            return Err(invalid("weyl.delta", "must lie in (0, 1)"));
        }
        increasing("weyl.taus", &self.weyl.taus)?;
        nonempty("resolvent.z", &self.resolvent.z)?;
        positive("resolvent.epsilon", self.resolvent.epsilon)?;
        positive("resolvent.cone_start", self.resolvent.cone_start)?;
        let mx = &self.mixing;
        nonzero("mixing.stride", mx.stride)?;
        nonzero("mixing.n_max", mx.n_max)?;
        if mx.steps < 10 * mx.stride {
            return Err(invalid("mixing.steps", "need at least 10 recorded step counts"));
        }
        nonzero("mixing.cells", mx.cells)?;
        nonzero("mixing.bands", mx.bands)?;
        nonzero("mixing.sectors", mx.sectors)?;
        positive("excursion.epsilon", self.excursion.epsilon)?;
        increasing("excursion.ratios", &self.excursion.ratios)?;
        nonzero("excursion.trials", self.excursion.trials)?;
        positive("clt.t", self.clt.t)?;
        nonempty("clt.indices", &self.clt.indices)?;
        increasing("paths.times", &self.paths.times)?;
        nonzero("paths.count", self.paths.count)?;
        increasing("fdd.times", &self.fdd.times)?;
        if self.fdd.times.len() > 2 {
            return Err(invalid("fdd.times", "one or two observation times"));
        }
        nonzero("fdd.cells", self.fdd.cells)?;
        nonzero("fdd.bands", self.fdd.bands)?;
        nonzero("fdd.sectors", self.fdd.sectors)?;
        nonzero("fdd.quad_nodes", self.fdd.quad_nodes)?;
        positive("modulus.horizon", self.modulus.horizon)?;
        increasing("modulus.deltas", &self.modulus.deltas)?;
        positive("modulus.epsilon", self.modulus.epsilon)?;
        nonzero("modulus.paths", self.modulus.paths)?;
        let crit = &self.verify.criteria;
        if crit.iter().any(|c| !(1..=CRITERIA).contains(c)) {
            return Err(invalid("verify.criteria", format!("criteria are numbered 1..={CRITERIA}")));
        }
        let mut sorted = crit.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != crit.len() {
            return Err(invalid("verify.criteria", "duplicate criterion"));
        }
        Ok(m)
    }
}

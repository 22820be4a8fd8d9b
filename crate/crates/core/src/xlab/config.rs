//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fock::ModeFunction;
use crate::hartree::gaussian_packet;
use crate::lattice::{build_grid, regularize, LatticeGrid, PotentialFamily, PotentialSpec};
use crate::manybody::DEFAULT_DIMENSION_CAP;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub potential: PotentialFamily,
    #[serde(default)]
    pub regularization: Regularization,
    pub phi0: InitialState,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_cap")]
    pub dimension_cap: usize,
    #[serde(default)]
    pub section2: Option<Section2Config>,
    #[serde(default)]
    pub lemmas: Option<LemmaConfig>,
    #[serde(default)]
    pub hartree: Option<HartreeRunConfig>,
    #[serde(default)]
    pub fit: Option<FitConfig>,
}

fn default_cap() -> usize {
    DEFAULT_DIMENSION_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub sites: usize,
    #[serde(default = "one")]
    pub spacing: f64,
}

fn one() -> f64 {
    1.0
}

/// Cutoff rule for the regularized potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Regularization {
    /// No cutoff.
    #[default]
    None,
    Fixed { alpha: f64 },
    /// `alpha_N = N^{-r}`; `combined` additionally demands `r >= 3`.
    Power {
        r: u32,
        #[serde(default)]
        combined: bool,
    },
}

impl Regularization {
    pub fn alpha(&self, particles: usize) -> Option<f64> {
        match *self {
            Self::None => None,
            Self::Fixed { alpha } => Some(alpha),
            Self::Power { r, .. } => Some((particles as f64).powi(-(r as i32))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    Uniform,
    GaussianPacket { center: f64, width: f64, momentum: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub particles: Vec<usize>,
    pub times: Vec<f64>,
    #[serde(default = "default_band")]
    pub slope_band: [f64; 2],
    /// Envelope dominance is asserted for `N >=` this value.
    #[serde(default = "default_envelope_from")]
    pub envelope_from: usize,
    /// Distances below this are treated as zero.
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_band() -> [f64; 2] {
    [-1.35, -0.65]
}

fn default_envelope_from() -> usize {
    6
}

fn default_floor() -> f64 {
    1e-12
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            particles: (2..=10).collect(),
            times: vec![0.5, 1.0],
            slope_band: default_band(),
            envelope_from: default_envelope_from(),
            floor: default_floor(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { dt: 2.5e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Used when no `--out` is given; relative to the config file.
    pub dir: PathBuf,
    /// Every how many solver steps a trajectory row is written.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stride() -> usize {
    100
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("reports"), stride: default_stride() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section2Config {
    pub alphas: Vec<f64>,
    pub particles: usize,
    pub times: Vec<f64>,
    /// Allowed relative spread of `gap / alpha` around its mean.
    #[serde(default = "quarter")]
    pub spread: f64,
}

fn quarter() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    pub n_max: usize,
    /// `N` entering the cubic and quartic scales and the cutoff rule.
    pub particles: usize,
    /// Horizon for the oracle, locality and growth checks.
    pub t_max: f64,
    /// Horizon for the kinetic sandwich sweep.
    pub sandwich_t_max: f64,
    pub sandwich_samples: usize,
    #[serde(default = "default_l3")]
    pub l3_particles: Vec<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub random_samples: usize,
    /// Noise floor below which envelope growth counts as unresolved.
    #[serde(default = "default_noise")]
    pub noise_floor: f64,
    /// Sampling stride (solver steps) of envelope series.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_l3() -> Vec<usize> {
    vec![4, 8, 16]
}

fn default_seed() -> u64 {
    7
}

fn default_samples() -> usize {
    100
}

fn default_noise() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HartreeRunConfig {
    pub t_end: f64,
    /// Cutoff applied before solving, if any.
    #[serde(default)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// CSV with columns `N` and `distance` (or `trace_distance`); relative to the config file.
    pub input: PathBuf,
    /// Restrict to rows whose `t` column equals this.
    #[serde(default)]
    pub t: Option<f64>,
}

/// A parsed configuration with its hash and location.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub hash: String,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<LoadedConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let config = ExperimentConfig::from_toml(&text)?;
    let hash = config.hash();
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, hash, base_dir })
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form, so formatting and comments do not matter.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let grid = self.grid()?;
        self.potential(&grid)?;
        self.initial_state(&grid)?;
        match self.regularization {
            Regularization::Fixed { alpha } if !(alpha > 0.0) => return bad(format!("alpha must be positive, got {alpha}")),
            Regularization::Power { r, .. } if r < 1 => return bad("cutoff exponent r must be >= 1".into()),
            Regularization::Power { r, combined: true } if r < 3 => {
                return bad(format!("combined mode needs alpha_N <= N^-3, got r = {r}"))
            }
            _ => {}
        }
        if !(self.solver.dt.is_finite() && self.solver.dt > 0.0) {
            return bad(format!("solver dt must be positive, got {}", self.solver.dt));
        }
        if self.sweep.particles.is_empty() || self.sweep.particles.contains(&0) {
            return bad("sweep.particles must be a nonempty list of positive integers".into());
        }
        if self.sweep.times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return bad("sweep.times must be finite and nonnegative".into());
        }
        if self.sweep.slope_band[0] > self.sweep.slope_band[1] {
            return bad("slope_band must be [low, high]".into());
        }
        for &n in &self.sweep.particles {
            let dim = crate::fock::sector_dim(self.grid.sites, n);
            if dim > self.dimension_cap {
                return bad(format!(
                    "N = {n} on M = {} gives sector dimension {dim} above cap {}",
                    self.grid.sites, self.dimension_cap
                ));
            }
        }
        if let Some(s) = &self.section2 {
            if s.alphas.len() < 2 || s.alphas.iter().any(|a| !(*a > 0.0)) {
                return bad("section2.alphas needs at least two positive values".into());
            }
            if s.particles < 2 {
                return bad("section2.particles must be >= 2".into());
            }
        }
        if let Some(l) = &self.lemmas {
            if l.n_max < 4 || l.particles == 0 || !(l.t_max > 0.0) || !(l.sandwich_t_max > 0.0) || l.sandwich_samples < 2 {
                return bad("lemmas needs n_max >= 4, particles >= 1, positive horizons and >= 2 sandwich samples".into());
            }
        }
        if let Some(h) = &self.hartree {
            if !(h.t_end > 0.0) {
                return bad("hartree.t_end must be positive".into());
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<LatticeGrid> {
        build_grid(self.grid.sites, self.grid.spacing)
    }

    pub fn potential(&self, grid: &LatticeGrid) -> Result<PotentialSpec> {
        PotentialSpec::on_grid(self.potential.clone(), grid)
    }

    /// Potential with the cutoff rule applied for `particles`.
    pub fn regularized(&self, grid: &LatticeGrid, particles: usize) -> Result<(PotentialSpec, Option<f64>)> {
        let v = self.potential(grid)?;
        match self.regularization.alpha(particles) {
            Some(a) => Ok((regularize(&v, a)?, Some(a))),
            None => Ok((v, None)),
        }
    }

    pub fn initial_state(&self, grid: &LatticeGrid) -> Result<ModeFunction> {
        match self.phi0 {
            InitialState::Uniform => Ok(ModeFunction::uniform(grid.sites())),
            InitialState::GaussianPacket { center, width, momentum } => gaussian_packet(grid, center, width, momentum),
        }
    }

    pub fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
workers = 2
[grid]
sites = 4
[potential]
family = "soft-coulomb"
v0 = 1.0
a = 0.5
[regularization]
rule = "power"
r = 1
[phi0]
kind = "gaussian-packet"
center = 1.5
width = 1.0
momentum = 0.5
[sweep]
particles = [2, 3, 4]
times = [0.5]
"#;

    #[test]
    fn parses_and_hashes_canonically() {
        let a = ExperimentConfig::from_toml(BASE).unwrap();
        let b = ExperimentConfig::from_toml(&format!("# comment\n{BASE}\n")).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        assert_eq!(a.regularization.alpha(4), Some(0.25));
        assert_eq!(a.solver.dt, 2.5e-4);
        let c = ExperimentConfig::from_toml(&BASE.replace("v0 = 1.0", "v0 = 1.5")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_toml(&BASE.replace("r = 1", "r = 0")).is_err());
        assert!(ExperimentConfig::from_toml(&BASE.replace("r = 1", "r = 2\ncombined = true")).is_err());
        assert!(ExperimentConfig::from_toml(&BASE.replace("[2, 3, 4]", "[2, 3, 400]")).is_err());
        assert!(ExperimentConfig::from_toml(&BASE.replace("sites = 4", "sites = 4\nbogus = 1")).is_err());
        assert!(ExperimentConfig::from_toml(&BASE.replace("width = 1.0", "width = -1.0")).is_err());
    }
}

//! Run configuration: a single JSON document.

use std::path::{Path, PathBuf};

use lifespan_core::bounds::{BoundsOptions, ProblemSpec};
use lifespan_core::density::{
    default_alphas, geometric_radii, ring_outer_radii, Centers, DensityRequest, Estimator,
};
use lifespan_core::kernel::QuadratureConfig;
use lifespan_core::simulate::SimulationConfig;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec<f64>,
    #[serde(default)]
    pub density: DensityConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub bounds: BoundsOptions<f64>,
    #[serde(default)]
    pub simulate: SimulationConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RadiusGrid {
    List(Vec<f64>),
    Geometric { r_min: f64, r_max: f64, count: usize },
    /// Outer radii of the amplitude bands of a ring datum.
    RingOuter,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorConfig {
    /// Seeded from the run's `seed`.
    MonteCarlo { samples: usize },
    GridOracle { resolution: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    /// Thresholds; when absent, `alpha_count` log-spaced values up to ‖φ‖∞.
    pub alphas: Option<Vec<f64>>,
    pub alpha_count: usize,
    pub radii: RadiusGrid,
    pub centers: Centers<f64>,
    pub estimator: EstimatorConfig,
    /// Read densities from this file instead of computing them.
    pub ingest: Option<PathBuf>,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            alphas: None,
            alpha_count: 16,
            radii: RadiusGrid::Geometric { r_min: 10.0, r_max: 1000.0, count: 12 },
            centers: Centers::AutoSearch,
            estimator: EstimatorConfig::MonteCarlo { samples: 100_000 },
            ingest: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Times at which the semigroup supremum is compared with `α·D̄(α)`.
    pub semigroup_times: Vec<f64>,
    /// Allowed undershoot, relative to `α`.
    pub semigroup_tolerance: f64,
    /// Relative slack in `lower ≤ T_num ≤ upper`.
    pub sandwich_tolerance: f64,
    pub kernel_nodes: usize,
    pub kernel_samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            semigroup_times: vec![0.5, 1.0, 2.0],
            semigroup_tolerance: 0.02,
            sandwich_tolerance: 0.02,
            kernel_nodes: 64,
            kernel_samples: 8,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Write the `# generated` comment line above each CSV body.
    pub timestamp: bool,
    /// Dump every stored simulation snapshot as a raw grid file.
    pub grid_dumps: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), timestamp: true, grid_dumps: false }
    }
}

/// A parsed configuration with its effective seed and provenance hash.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub run: RunConfig,
    pub seed: Option<u64>,
    /// First 16 hex digits of SHA-256 over the config bytes and the seed.
    pub hash: String,
    pub base_dir: PathBuf,
}

pub fn config_hash(bytes: &[u8], seed: Option<u64>) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    match seed {
        Some(s) => h.update(s.to_le_bytes()),
        None => h.update(b"noseed"),
    }
    hex::encode(h.finalize())[..16].to_string()
}

pub fn load(path: &Path, seed_override: Option<u64>) -> Result<LoadedConfig, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&bytes, seed_override, path.parent().unwrap_or(Path::new(".")))
}

pub fn parse(bytes: &[u8], seed_override: Option<u64>, base_dir: &Path) -> Result<LoadedConfig, CliError> {
    let run: RunConfig = serde_json::from_slice(bytes).map_err(|e| CliError::Config(e.to_string()))?;
    run.problem.validate()?;
    run.simulate.validate()?;
    run.quadrature.build::<f64>()?;
    let seed = seed_override.or(run.seed);
    Ok(LoadedConfig { hash: config_hash(bytes, seed), run, seed, base_dir: base_dir.to_path_buf() })
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() { p.to_path_buf() } else { self.base_dir.join(p) }
    }

    /// The density request with grids expanded and the seed filled in.
    pub fn density_request(&self) -> Result<DensityRequest<f64>, CliError> {
        let d = &self.run.density;
        let datum = &self.run.problem.datum;
        let alphas = d.alphas.clone().unwrap_or_else(|| default_alphas(datum.sup_norm(), d.alpha_count));
        let radii = match &d.radii {
            RadiusGrid::List(r) => r.clone(),
            RadiusGrid::Geometric { r_min, r_max, count } => geometric_radii(*r_min, *r_max, *count)?,
            RadiusGrid::RingOuter => ring_outer_radii(datum)
                .ok_or_else(|| CliError::Config("ring_outer radii need a radial_rings datum".into()))?,
        };
        let estimator = match d.estimator {
            EstimatorConfig::MonteCarlo { samples } => {
                let seed = self
                    .seed
                    .ok_or_else(|| CliError::Config("monte_carlo estimator requires a seed".into()))?;
                Estimator::MonteCarlo { samples, seed }
            }
            EstimatorConfig::GridOracle { resolution } => Estimator::GridOracle { resolution },
        };
        let req = DensityRequest { alphas, radii, centers: d.centers.clone(), estimator };
        req.validate(datum.dimension())?;
        Ok(req)
    }
}

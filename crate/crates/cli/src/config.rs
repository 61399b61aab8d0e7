//! Config schemas. Unknown fields are rejected everywhere.

use crate::{CliError, CliResult};
use chaincert_core::procsim::NoiseKind;
use chaincert_core::young::YoungFunction;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<(T, Vec<u8>)> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
    let cfg = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((cfg, bytes))
}

fn default_p() -> f64 {
    1.0
}

/// Where the metric space comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceConfig {
    /// Distance matrices from CSV files.
    Csv {
        d1: String,
        #[serde(default)]
        d2: Option<String>,
        #[serde(default = "default_p")]
        p1: f64,
        #[serde(default = "default_p")]
        p2: f64,
    },
    /// Euclidean distances of seeded random points.
    RandomEuclidean { points: usize, dim: usize, seed: u64 },
    /// l2 / l_inf two-distance space of seeded random points.
    RandomTwoDist { points: usize, dim: usize, seed: u64, p1: f64, p2: f64 },
    /// Calibrated FBM increment distance on the grid `{k/n}`.
    FbmIncrement { h: f64, grid_size: usize },
}

impl SpaceConfig {
    pub fn build(&self, base: &Path) -> CliResult<chaincert_core::FiniteMetricSpace> {
        use chaincert_core::FiniteMetricSpace as Fms;
        let space = match self {
            SpaceConfig::Csv { d1, d2, p1, p2 } => {
                let m1 = Fms::matrix_from_csv(&base.join(d1))?;
                match d2 {
                    None => Fms::new(m1)?,
                    Some(d2) => {
                        let m2 = Fms::matrix_from_csv(&base.join(d2))?;
                        Fms::with_two(m1, m2, *p1, *p2)?
                    }
                }
            }
            SpaceConfig::RandomEuclidean { points, dim, seed } => {
                Fms::euclidean(&random_points(*points, *dim, *seed))?
            }
            SpaceConfig::RandomTwoDist { points, dim, seed, p1, p2 } => {
                Fms::two_norm_space(&random_points(*points, *dim, *seed), 1.0, 1.0, *p1, *p2)?
            }
            SpaceConfig::FbmIncrement { h, grid_size } => {
                let grid: Vec<f64> =
                    (1..=*grid_size).map(|k| k as f64 / *grid_size as f64).collect();
                let model = chaincert_core::procsim::ProcessModel::fbm(*h, grid)?;
                chaincert_core::procsim::increment_distance(&model, 0)?.space
            }
        };
        Ok(space)
    }
}

pub fn random_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::Rng;
    let mut rng = chaincert_core::substream(seed, 0);
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal) / (dim as f64).sqrt())
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    pub space: SpaceConfig,
    pub psi: YoungFunction,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusConfig {
    pub space: SpaceConfig,
    pub psi: YoungFunction,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Fbm { h: f64, grid_size: usize },
    GaussianCsv { cov: String },
    Canonical { points: usize, dim: usize, point_seed: u64, noise: NoiseKind },
}

impl ModelConfig {
    pub fn build(&self, base: &Path) -> CliResult<chaincert_core::procsim::ProcessModel> {
        use chaincert_core::procsim::ProcessModel;
        Ok(match self {
            ModelConfig::Fbm { h, grid_size } => {
                let grid: Vec<f64> =
                    (1..=*grid_size).map(|k| k as f64 / *grid_size as f64).collect();
                ProcessModel::fbm(*h, grid)?
            }
            ModelConfig::GaussianCsv { cov } => {
                let m = chaincert_core::FiniteMetricSpace::matrix_from_csv(&base.join(cov))?;
                ProcessModel::gaussian(m)?
            }
            ModelConfig::Canonical { points, dim, point_seed, noise } => {
                ProcessModel::canonical(random_points(*points, *dim, *point_seed), *noise)?
            }
        })
    }
}

/// Overrides for the certificate constants.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub k: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropVerifyConfig {
    pub model: ModelConfig,
    /// Proposition names: "p1", "p2", "p3", "p4".
    pub props: Vec<String>,
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    /// Base levels for the point propositions (P1/P3).
    #[serde(default = "default_m_levels")]
    pub m_levels: Vec<usize>,
    #[serde(default)]
    pub constants: Option<ConstantsConfig>,
    /// Monte Carlo sample size for the `E Z <= 1` check; 0 disables it.
    #[serde(default)]
    pub z_paths: usize,
    /// Emit the FBM modulus profile table (FBM models only).
    #[serde(default)]
    pub profile: bool,
}

fn default_m_levels() -> Vec<usize> {
    vec![0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalConfig {
    pub dim: usize,
    pub class_size: usize,
    pub class_seed: u64,
    pub law: chaincert_core::empsq::SampleLaw,
    pub n: usize,
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub constants: Option<SquareConstantsConfig>,
    #[serde(default)]
    pub tail: Option<TailConfig>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquareConstantsConfig {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub k: Option<f64>,
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub d_value: f64,
    pub trials: usize,
    #[serde(default)]
    pub u_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingConfig {
    pub n: usize,
    pub m_cols: usize,
    pub m: usize,
    pub ensemble: chaincert_core::sensing::Ensemble,
    #[serde(default = "default_matrices")]
    pub matrices: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub calibration_file: Option<String>,
    /// "delta", "tail", or "order_stat".
    #[serde(default = "default_sensing_mode")]
    pub mode: String,
    /// Dump each sampled matrix as matrix_<i>.csv (delta mode).
    #[serde(default)]
    pub export_matrices: bool,
}

fn default_matrices() -> usize {
    100
}

fn default_trials() -> usize {
    10_000
}

fn default_sensing_mode() -> String {
    "delta".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    #[serde(default = "default_calib_seed")]
    pub seed: u64,
}

fn default_calib_seed() -> u64 {
    90210
}

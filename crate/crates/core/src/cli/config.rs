use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::fourier::{Method, DEFAULT_RESOLUTION};
use crate::geometry::Coverage;
use crate::inference::{DEFAULT_RANGES, DEFAULT_RATIOS};
use crate::kernels::{CovarianceKernel, KernelFamily, KernelSpec};

use super::CliError;

/// Reads a JSON config, or the defaults when `path` is `None`.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

/// Kernel overrides from the command line.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct KernelFlags {
    /// gaussian, matern or exponential
    #[arg(long, value_parser = parse_family)]
    pub kernel_family: Option<KernelFamily>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
}

fn parse_family(s: &str) -> Result<KernelFamily, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown kernel family {s:?}"))
}

impl KernelFlags {
    pub fn apply(&self, kernel: &CovarianceKernel) -> Result<CovarianceKernel, CliError> {
        let mut spec = KernelSpec::from(*kernel);
        if let Some(f) = self.kernel_family {
            spec.family = f;
        }
        if let Some(v) = self.sigma2 {
            spec.sigma2 = v;
        }
        if let Some(v) = self.theta {
            spec.theta = v;
        }
        if let Some(v) = self.nu {
            spec.nu = Some(v);
        }
        if spec.family == KernelFamily::Matern && spec.nu.is_none() {
            spec.nu = Some(1.5);
        }
        CovarianceKernel::try_from(spec).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExtentMode {
    Default,
    Extended,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccuracyConfig {
    pub kernel: CovarianceKernel,
    pub deltas: Vec<f64>,
    /// Cells per axis.
    pub resolutions: Vec<usize>,
    pub extent_mode: ExtentMode,
    /// Added to the extent in extended mode.
    pub padding: f64,
    pub coverage: Coverage,
}

impl Default for AccuracyConfig {
    fn default() -> Self {
        AccuracyConfig {
            kernel: CovarianceKernel::gaussian(1.0, 1.0).unwrap(),
            deltas: vec![0.3, 0.9, 1.5, 2.1, 2.7],
            resolutions: (3..=11).map(|m| 1 << m).collect(),
            extent_mode: ExtentMode::Default,
            padding: 1.0,
            coverage: Coverage::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsistencyConfig {
    pub n_polygons: usize,
    pub seed: u64,
    pub kernel: CovarianceKernel,
    pub resolutions: Vec<usize>,
    /// Square computational domain `[lo, hi]^2`.
    pub domain: (f64, f64),
    pub center_range: (f64, f64),
    pub radius_range: (f64, f64),
    pub min_vertices: usize,
    pub max_vertices: usize,
    pub irregularity: f64,
    pub coverage: Coverage,
    /// Off gives byte-identical reports across runs.
    pub timing: bool,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        ConsistencyConfig {
            n_polygons: 20,
            seed: 1,
            kernel: CovarianceKernel::matern(1.0, 0.5, 1.5).unwrap(),
            resolutions: vec![128, 256, 512],
            domain: (-12.5, 12.5),
            center_range: (-10.0, 10.0),
            radius_range: (0.6, 0.9),
            min_vertices: 3,
            max_vertices: 12,
            irregularity: 0.1,
            coverage: Coverage::Exact,
            timing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComputeCovConfig {
    pub kernel: CovarianceKernel,
    pub method: Method,
    pub resolution: usize,
    pub coverage: Coverage,
    /// Points per axis for jh.
    pub density: usize,
    pub padding: f64,
}

impl Default for ComputeCovConfig {
    fn default() -> Self {
        ComputeCovConfig {
            kernel: CovarianceKernel::matern(1.0, 0.5, 1.5).unwrap(),
            method: Method::Fair,
            resolution: DEFAULT_RESOLUTION,
            coverage: Coverage::Exact,
            density: 6,
            padding: 0.0,
        }
    }
}

/// `count` candidates from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Linear => crate::inference::linspace(self.min, self.max, self.count),
            Spacing::Log => crate::inference::geomspace(self.min, self.max, self.count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    /// Family and smoothness; range and variance are estimated.
    pub kernel: CovarianceKernel,
    pub method: Method,
    pub resolution: usize,
    pub coverage: Coverage,
    pub ranges: Sweep,
    pub ratios: Sweep,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            kernel: CovarianceKernel::matern(1.0, 0.5, 1.5).unwrap(),
            method: Method::Fair,
            resolution: DEFAULT_RESOLUTION,
            coverage: Coverage::Exact,
            ranges: Sweep {
                min: DEFAULT_RANGES.0,
                max: DEFAULT_RANGES.1,
                count: DEFAULT_RANGES.2,
                spacing: Spacing::Linear,
            },
            ratios: Sweep {
                min: DEFAULT_RATIOS.0,
                max: DEFAULT_RATIOS.1,
                count: DEFAULT_RATIOS.2,
                spacing: Spacing::Log,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = EstimateConfig::default();
        let back: EstimateConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let v = c.ranges.values();
        assert_eq!(v.len(), 9);
        assert_eq!(c.ratios.values().len(), 45);
    }

    #[test]
    fn partial_config_and_unknown_fields() {
        let c: ConsistencyConfig = serde_json::from_str(r#"{"n_polygons": 5, "seed": 9}"#).unwrap();
        assert_eq!(c.n_polygons, 5);
        assert_eq!(c.resolutions, vec![128, 256, 512]);
        assert!(serde_json::from_str::<ConsistencyConfig>(r#"{"polygons": 5}"#).is_err());
    }

    #[test]
    fn kernel_flags_override() {
        let base = CovarianceKernel::gaussian(1.0, 1.0).unwrap();
        let flags = KernelFlags {
            kernel_family: Some(KernelFamily::Matern),
            theta: Some(0.25),
            ..Default::default()
        };
        let k = flags.apply(&base).unwrap();
        assert_eq!(k, CovarianceKernel::matern(1.0, 0.25, 1.5).unwrap());
        let bad = KernelFlags {
            theta: Some(-1.0),
            ..Default::default()
        };
        assert!(bad.apply(&base).is_err());
    }
}

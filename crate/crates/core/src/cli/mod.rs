//! Command-line front end. Every command reads an optional JSON config;
//! flags override its fields.

pub mod config;
pub mod io;
pub mod pipeline;
pub mod studies;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::FairError;
use crate::fourier::Method;
use crate::geometry::{read_regions, Coverage};
use crate::inference::MleResult;

use config::{
    load, AccuracyConfig, ComputeCovConfig, ConsistencyConfig, EstimateConfig, ExtentMode,
    KernelFlags, Sweep,
};
use io::SurfaceFormat;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Run(#[from] FairError),
}

impl CliError {
    /// 2 for bad configuration or input, 3 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Run(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fair", version, about = "Regional covariance matrices, estimation and prediction via the 2-D DFT")]
pub struct Cli {
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// FAIR versus closed-form correlations for offset unit squares.
    AccuracyStudy(AccuracyArgs),
    /// FAIR versus direct quadrature on seeded random polygons.
    ConsistencyStudy(ConsistencyArgs),
    /// Covariance matrix of the regions in a file.
    ComputeCov(ComputeCovArgs),
    /// Likelihood grid search over range and variance ratio.
    Estimate(EstimateArgs),
    /// Kriging surface from an estimation result.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct AccuracyArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Cells per axis, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub resolutions: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    pub extent_mode: Option<ExtentMode>,
    #[arg(long)]
    pub padding: Option<f64>,
    /// `exact`, or subcells per axis for sampled cell coverage.
    #[arg(long)]
    pub coverage: Option<Coverage>,
    #[command(flatten)]
    pub kernel: KernelFlags,
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConsistencyArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_polygons: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub resolutions: Option<Vec<usize>>,
    /// `exact`, or subcells per axis for sampled cell coverage.
    #[arg(long)]
    pub coverage: Option<Coverage>,
    /// Write NA instead of wall times, for reproducible reports.
    #[arg(long)]
    pub no_timing: bool,
    #[command(flatten)]
    pub kernel: KernelFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the generated polygons as a regions file.
    #[arg(long)]
    pub regions_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComputeCovArgs {
    /// Regions JSON file.
    pub regions: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// fair, riemann or jh
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub resolution: Option<usize>,
    /// `exact`, or subcells per axis for sampled cell coverage.
    #[arg(long)]
    pub coverage: Option<Coverage>,
    #[arg(long)]
    pub density: Option<usize>,
    #[arg(long)]
    pub padding: Option<f64>,
    #[command(flatten)]
    pub kernel: KernelFlags,
    /// Matrix CSV; the sidecar goes next to it with a .json extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    pub regions: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// fair or riemann
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub resolution: Option<usize>,
    /// `exact`, or subcells per axis for sampled cell coverage.
    #[arg(long)]
    pub coverage: Option<Coverage>,
    /// min,max,count
    #[arg(long, value_delimiter = ',')]
    pub ranges: Option<Vec<f64>>,
    /// min,max,count (log spaced)
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
    #[command(flatten)]
    pub kernel: KernelFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    pub regions: PathBuf,
    /// Estimation result written by `estimate`.
    #[arg(long)]
    pub mle: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: SurfaceFormat,
    /// Fails unless it equals the resolution of the estimation grid.
    #[arg(long)]
    pub resolution: Option<usize>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn sweep(base: Sweep, v: Option<Vec<f64>>) -> Result<Sweep, CliError> {
    match v.as_deref() {
        None => Ok(base),
        Some([min, max, count]) if *count >= 1.0 && count.fract() == 0.0 => Ok(Sweep {
            min: *min,
            max: *max,
            count: *count as usize,
            spacing: base.spacing,
        }),
        Some(other) => Err(CliError::Config(format!("expected min,max,count, got {other:?}"))),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| FairError::io(p, e).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_resolutions(rs: &[usize]) -> Result<(), CliError> {
    match rs.iter().find(|r| **r < 8 || !r.is_power_of_two()) {
        Some(r) => Err(CliError::Config(format!("resolution {r} is not a power of two >= 8"))),
        None => Ok(()),
    }
}

fn config_err(e: FairError) -> CliError {
    match e {
        FairError::Json(_) | FairError::Format { .. } | FairError::InvalidPolygon(_) => {
            CliError::Config(e.to_string())
        }
        other => CliError::Run(other),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::AccuracyStudy(a) => {
            let mut cfg: AccuracyConfig = load(a.config.as_deref())?;
            set(&mut cfg.deltas, a.deltas);
            set(&mut cfg.resolutions, a.resolutions);
            set(&mut cfg.extent_mode, a.extent_mode);
            set(&mut cfg.padding, a.padding);
            set(&mut cfg.coverage, a.coverage);
            cfg.kernel = a.kernel.apply(&cfg.kernel)?;
            check_resolutions(&cfg.resolutions)?;
            let rows = studies::accuracy_study(&cfg)?;
            emit(a.out.as_deref(), &studies::accuracy_csv(&cfg, &rows)?)
        }
        Command::ConsistencyStudy(a) => {
            let mut cfg: ConsistencyConfig = load(a.config.as_deref())?;
            set(&mut cfg.n_polygons, a.n_polygons);
            set(&mut cfg.seed, a.seed);
            set(&mut cfg.resolutions, a.resolutions);
            set(&mut cfg.coverage, a.coverage);
            if a.no_timing {
                cfg.timing = false;
            }
            cfg.kernel = a.kernel.apply(&cfg.kernel)?;
            check_resolutions(&cfg.resolutions)?;
            let report = studies::consistency_study(&cfg)?;
            if let Some(p) = &a.regions_out {
                let regions: Vec<_> = report
                    .polygons
                    .iter()
                    .enumerate()
                    .map(|(i, p)| crate::geometry::Region {
                        id: format!("p{i}"),
                        vertices: p.clone(),
                        value: None,
                    })
                    .collect();
                crate::geometry::write_regions(p, &regions)?;
            }
            emit(a.out.as_deref(), &studies::consistency_csv(&cfg, &report)?)
        }
        Command::ComputeCov(a) => {
            let mut cfg: ComputeCovConfig = load(a.config.as_deref())?;
            set(&mut cfg.method, a.method);
            set(&mut cfg.resolution, a.resolution);
            set(&mut cfg.coverage, a.coverage);
            set(&mut cfg.density, a.density);
            set(&mut cfg.padding, a.padding);
            cfg.kernel = a.kernel.apply(&cfg.kernel)?;
            check_resolutions(&[cfg.resolution])?;
            let regions = read_regions(&a.regions).map_err(config_err)?;
            let (cov, sidecar) = pipeline::compute_cov(&regions, &cfg)?;
            io::write_cov_matrix(&a.out, &cov, &sidecar)?;
            if let Some(c) = &sidecar.point_counts {
                eprintln!(
                    "{} points per region (min {}, max {})",
                    cfg.method,
                    c.iter().min().unwrap_or(&0),
                    c.iter().max().unwrap_or(&0)
                );
            }
            Ok(())
        }
        Command::Estimate(a) => {
            let mut cfg: EstimateConfig = load(a.config.as_deref())?;
            set(&mut cfg.method, a.method);
            set(&mut cfg.resolution, a.resolution);
            set(&mut cfg.coverage, a.coverage);
            cfg.ranges = sweep(cfg.ranges, a.ranges)?;
            cfg.ratios = sweep(cfg.ratios, a.ratios)?;
            cfg.kernel = a.kernel.apply(&cfg.kernel)?;
            check_resolutions(&[cfg.resolution])?;
            if cfg.method == Method::Jh {
                return Err(CliError::Config("estimation supports fair and riemann".into()));
            }
            let regions = read_regions(&a.regions).map_err(config_err)?;
            let result = pipeline::estimate(&regions, &cfg).map_err(|e| match e {
                FairError::InvalidParameter(m) => CliError::Config(m),
                other => CliError::Run(other),
            })?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            emit(Some(&a.out), &serde_json::to_string_pretty(&result).map_err(FairError::from)?)
        }
        Command::Predict(a) => {
            let regions = read_regions(&a.regions).map_err(config_err)?;
            let text = std::fs::read_to_string(&a.mle).map_err(|e| FairError::io(&a.mle, e))?;
            let mle: MleResult = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", a.mle.display())))?;
            let pred = pipeline::predict(&regions, &mle, a.resolution).map_err(|e| match e {
                FairError::DimensionMismatch { .. } | FairError::InvalidParameter(_) => {
                    CliError::Config(e.to_string())
                }
                other => CliError::Run(other),
            })?;
            io::write_surface(&a.out, &pred.grid, &pred.values, a.format)?;
            eprintln!(
                "setup {:.3} s, prediction {:.3} s",
                pred.setup_seconds, pred.predict_seconds
            );
            Ok(())
        }
    }
}

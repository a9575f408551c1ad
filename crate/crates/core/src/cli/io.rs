//! Report and artifact files: covariance CSV with a JSON sidecar, and
//! predicted surfaces as CSV or raw little-endian doubles with a grid
//! sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};
use crate::fourier::{CovMatrix, GridSpec, Method, RegularGrid};
use crate::kernels::CovarianceKernel;

/// Metadata written next to a covariance CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovSidecar {
    pub method: Method,
    pub resolution: usize,
    pub kernel: Option<CovarianceKernel>,
    pub ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Quadrature points per region (riemann, jh).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_counts: Option<Vec<usize>>,
    #[serde(default)]
    pub seconds: f64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| FairError::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| FairError::io(path, e))
}

fn format_err(path: &Path, message: impl Into<String>) -> FairError {
    FairError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Writes `path` (CSV, header row of ids) and its `.json` sidecar.
pub fn write_cov_matrix(path: &Path, cov: &CovMatrix, sidecar: &CovSidecar) -> Result<()> {
    let n = cov.dim();
    if sidecar.ids.len() != n {
        return Err(FairError::mismatch(n, sidecar.ids.len()));
    }
    let mut out = sidecar.ids.join(",");
    out.push('\n');
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{}", cov.matrix[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write(path, out)?;
    write(&sidecar_path(path), serde_json::to_string_pretty(sidecar)?)
}

pub fn read_cov_matrix(path: &Path) -> Result<(CovMatrix, CovSidecar)> {
    let text = read(path)?;
    let sidecar: CovSidecar = serde_json::from_str(&read(&sidecar_path(path))?)?;
    let mut lines = text.lines();
    let ids: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let n = ids.len();
    let mut values = Vec::with_capacity(n * n);
    for (r, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format_err(path, format!("row {}: {e}", r + 1)))?;
        if row.len() != n {
            return Err(format_err(path, format!("row {} has {} entries, expected {n}", r + 1, row.len())));
        }
        values.extend(row);
    }
    if values.len() != n * n {
        return Err(format_err(path, format!("expected {n} rows")));
    }
    let m = DMatrix::from_row_slice(n, n, &values);
    let cov = CovMatrix::new(m, sidecar.method, sidecar.resolution, sidecar.kernel)?;
    Ok((cov, sidecar))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceFormat {
    Csv,
    Binary,
}

/// CSV of `x,y,value` at cell centers, `j` varying fastest.
pub fn surface_csv(grid: &RegularGrid, values: &[f64]) -> Result<String> {
    if values.len() != grid.len() {
        return Err(FairError::mismatch(grid.len(), values.len()));
    }
    let mut out = String::with_capacity(values.len() * 40);
    out.push_str("x,y,value\n");
    for i in 0..grid.nx() {
        for j in 0..grid.ny() {
            let [x, y] = grid.cell_center(i, j);
            let _ = writeln!(out, "{x},{y},{}", values[grid.index(i, j)]);
        }
    }
    Ok(out)
}

pub fn write_surface(path: &Path, grid: &RegularGrid, values: &[f64], format: SurfaceFormat) -> Result<()> {
    match format {
        SurfaceFormat::Csv => write(path, surface_csv(grid, values)?),
        SurfaceFormat::Binary => {
            if values.len() != grid.len() {
                return Err(FairError::mismatch(grid.len(), values.len()));
            }
            let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
            write(path, bytes)?;
            write(&sidecar_path(path), serde_json::to_string_pretty(&GridSpec::from(*grid))?)
        }
    }
}

/// Reads a binary surface and its grid sidecar.
pub fn read_surface_binary(path: &Path) -> Result<(RegularGrid, Vec<f64>)> {
    let spec: GridSpec = serde_json::from_str(&read(&sidecar_path(path))?)?;
    let grid = RegularGrid::try_from(spec)?;
    let bytes = fs::read(path).map_err(|e| FairError::io(path, e))?;
    if bytes.len() != grid.len() * 8 {
        return Err(format_err(
            path,
            format!("{} bytes for a {}x{} grid", bytes.len(), grid.nx(), grid.ny()),
        ));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((grid, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_surface_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bin");
        let grid = RegularGrid::new([-1.25, 0.1], 8, 16, 0.3, 1.0 / 3.0).unwrap();
        let values: Vec<f64> = (0..grid.len())
            .map(|k| (k as f64 * 0.37).sin() / 7.0 + f64::EPSILON * k as f64)
            .collect();
        write_surface(&path, &grid, &values, SurfaceFormat::Binary).unwrap();
        let (g, v) = read_surface_binary(&path).unwrap();
        assert_eq!(g, grid);
        assert!(v.iter().zip(&values).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(write_surface(&path, &grid, &values[1..], SurfaceFormat::Binary).is_err());
    }

    #[test]
    fn csv_surface_layout() {
        let grid = RegularGrid::new([0.0, 0.0], 8, 8, 1.0, 1.0).unwrap();
        let values: Vec<f64> = (0..64).map(f64::from).collect();
        let s = surface_csv(&grid, &values).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "x,y,value");
        assert_eq!(lines[1], "0.5,0.5,0");
        assert_eq!(lines[2], "0.5,1.5,1");
        assert_eq!(lines.len(), 65);
    }

    #[test]
    fn cov_matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.csv");
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.1 + 0.2, 0.1 + 0.2, 0.7]);
        let cov = CovMatrix::new(m, Method::Riemann, 64, None).unwrap();
        let side = CovSidecar {
            method: Method::Riemann,
            resolution: 64,
            kernel: None,
            ids: vec!["a".into(), "b".into()],
            grid: None,
            point_counts: Some(vec![3, 4]),
            seconds: 0.0,
        };
        write_cov_matrix(&path, &cov, &side).unwrap();
        let (back, s) = read_cov_matrix(&path).unwrap();
        assert_eq!(back.matrix, cov.matrix);
        assert_eq!(s, side);
        assert!(read(&path).unwrap().starts_with("a,b\n"));
    }
}

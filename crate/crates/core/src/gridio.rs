//! Flat-CSV grid files with JSON sidecar metadata, fit summaries, and
//! scenario output. Numeric CSV fields use the shortest round-trip decimal
//! representation, so parsing reproduces the written doubles bit-exactly.

use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::RiskReport;
use crate::sim::ScenarioResult;

pub const SCHEMA_VERSION: u32 = 1;

/// Sidecar metadata for a grid file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridMeta {
    pub schema_version: u32,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub wrap: Vec<bool>,
    #[serde(default)]
    pub family: Option<String>,
    /// Values already on the natural-statistic scale (for the chi-squared
    /// family: log of the raw observation)?
    #[serde(default)]
    pub log_transformed: bool,
}

/// A flat real array in row-major vertex order plus its metadata.
#[derive(Clone, Debug)]
pub struct GridFile {
    pub values: Vec<f64>,
    pub meta: GridMeta,
}

impl GridFile {
    pub fn validate(&self) -> Result<()> {
        let n: usize = self.meta.dims.iter().product();
        if self.values.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

/// Sidecar path: `<values>.meta.json`.
pub fn sidecar_path(values_path: &Path) -> PathBuf {
    let mut s = values_path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Read one value per line (header lines starting with '#' are skipped).
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        for field in trimmed.split(',') {
            let field = field.trim();
            if field.is_empty() {
                continue;
            }
            let v: f64 = field.parse().map_err(|e| Error::Parse {
                what: "grid value",
                detail: format!("line {}: {e}", lineno + 1),
            })?;
            out.push(v);
        }
    }
    Ok(out)
}

pub fn write_values(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for v in values {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

pub fn read_grid(values_path: &Path) -> Result<GridFile> {
    let values = read_values(values_path)?;
    let side = sidecar_path(values_path);
    let meta = if side.exists() {
        let text = std::fs::read_to_string(&side)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            what: "grid sidecar",
            detail: e.to_string(),
        })?
    } else {
        GridMeta {
            schema_version: SCHEMA_VERSION,
            dims: vec![values.len()],
            wrap: vec![],
            family: None,
            log_transformed: false,
        }
    };
    let grid = GridFile { values, meta };
    grid.validate()?;
    Ok(grid)
}

pub fn write_grid(values_path: &Path, grid: &GridFile) -> Result<()> {
    grid.validate()?;
    write_values(values_path, &grid.values)?;
    let side = sidecar_path(values_path);
    let text = serde_json::to_string_pretty(&grid.meta).expect("meta serializes");
    std::fs::write(side, text)?;
    Ok(())
}

/// JSON summary written next to fit outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitSummary {
    pub schema_version: u32,
    pub family: String,
    pub estimator: String,
    pub dims: Vec<usize>,
    pub orders: Vec<usize>,
    pub wrap: Vec<bool>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    pub kkt_residual: f64,
    pub df: f64,
    /// Sensitivity of df to the active-set tolerance (tol/10, tol, tol*10).
    pub df_sensitivity: [f64; 3],
    pub objective: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    std::fs::write(path, text)?;
    Ok(())
}

/// Tuning report JSON payload.
#[derive(Serialize)]
pub struct TuneOutput<'a> {
    pub schema_version: u32,
    pub report: &'a RiskReport,
    pub sigma_sq: Option<f64>,
}

/// Long-format CSV with one row per (n, rep, estimator).
pub fn write_scenario_csv(path: &Path, result: &ScenarioResult) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        w,
        "n,rep,estimator,error_metric,value,selected_lambda,runtime_seconds,converged"
    )?;
    for row in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            row.n,
            row.rep,
            row.estimator,
            row.metric.name(),
            row.value,
            row.selected_lambda,
            row.runtime_seconds,
            row.converged
        )?;
    }
    Ok(())
}

/// Manifest accompanying a scenario CSV.
#[derive(Serialize)]
pub struct ScenarioManifest<'a> {
    pub schema_version: u32,
    pub scenario: &'a crate::sim::Scenario,
    pub software_version: &'static str,
    pub row_count: usize,
}

pub fn write_scenario_manifest(path: &Path, result: &ScenarioResult) -> Result<()> {
    let manifest = ScenarioManifest {
        schema_version: SCHEMA_VERSION,
        scenario: &result.scenario,
        software_version: env!("CARGO_PKG_VERSION"),
        row_count: result.rows.len(),
    };
    write_json(path, &manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip_bit_exactly() {
        let dir = std::env::temp_dir().join("ltf_gridio_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("vals.csv");
        let mut rng = crate::rng::CounterRng::new(33, 0);
        let values: Vec<f64> = (0..257)
            .map(|_| (rng.next_normal() * 1e3).exp() * rng.next_normal())
            .collect();
        write_values(&path, &values).unwrap();
        let back = read_values(&path).unwrap();
        assert_eq!(values.len(), back.len());
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits(), "{a} vs {b}");
        }
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn grid_with_sidecar_round_trips() {
        let dir = std::env::temp_dir().join("ltf_gridio_test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("grid.csv");
        let grid = GridFile {
            values: (0..12).map(|i| i as f64 / 7.0).collect(),
            meta: GridMeta {
                schema_version: SCHEMA_VERSION,
                dims: vec![3, 4],
                wrap: vec![false, true],
                family: Some("poisson".into()),
                log_transformed: false,
            },
        };
        write_grid(&path, &grid).unwrap();
        let back = read_grid(&path).unwrap();
        assert_eq!(back.meta, grid.meta);
        assert_eq!(back.values, grid.values);
        std::fs::remove_file(&path).unwrap();
        std::fs::remove_file(sidecar_path(&path)).unwrap();
    }

    #[test]
    fn dims_mismatch_rejected() {
        let grid = GridFile {
            values: vec![1.0; 5],
            meta: GridMeta {
                schema_version: SCHEMA_VERSION,
                dims: vec![2, 3],
                wrap: vec![],
                family: None,
                log_transformed: false,
            },
        };
        assert!(matches!(
            grid.validate(),
            Err(Error::LengthMismatch { .. })
        ));
    }
}

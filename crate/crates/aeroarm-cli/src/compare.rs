//! Aligned comparison of two runs' error traces.

use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use aeroarm::{errors_from_csv, ErrorRow};

use crate::pipeline::PipelineError;

/// Per-column statistics for two aligned runs. `delta` entries are B minus
/// A, so a positive peak delta means run A has the smaller peak error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnComparison {
    pub name: String,
    pub peak_a: f64,
    pub rms_a: f64,
    pub peak_b: f64,
    pub rms_b: f64,
    pub peak_delta: f64,
    pub rms_delta: f64,
    /// Per-sample `a - b`.
    pub deltas: Vec<f64>,
}

/// Comparison report between two output directories.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: u32,
    pub samples: usize,
    pub t: Vec<f64>,
    pub columns: Vec<ColumnComparison>,
    /// Peak |z_err_compensated| of run B minus run A: positive when run A
    /// holds the end-effector better.
    pub peak_z_error_reduction: f64,
}

fn load_errors(dir: &FsPath) -> Result<Vec<ErrorRow>, PipelineError> {
    let path = dir.join("errors.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::Artifact {
        path: path.clone(),
        message: e.to_string(),
    })?;
    errors_from_csv(&text).map_err(|e| PipelineError::Artifact {
        path,
        message: e.to_string(),
    })
}

/// Compares the error traces of two runs sample by sample. The runs must
/// cover the same time grid.
pub fn compare_runs(run_a: &FsPath, run_b: &FsPath) -> Result<Comparison, PipelineError> {
    let a = load_errors(run_a)?;
    let b = load_errors(run_b)?;
    if a.len() != b.len() {
        return Err(PipelineError::Artifact {
            path: run_b.join("errors.csv"),
            message: format!("sample count {} does not match run A's {}", b.len(), a.len()),
        });
    }
    if let Some(k) = a.iter().zip(&b).position(|(x, y)| x.t != y.t) {
        return Err(PipelineError::Artifact {
            path: run_b.join("errors.csv"),
            message: format!(
                "time grids diverge at sample {k}: {} vs {}",
                a[k].t, b[k].t
            ),
        });
    }

    let fields: [(&str, fn(&ErrorRow) -> f64); 4] = [
        ("translation_err", |r| r.translation_err),
        ("rotation_err", |r| r.rotation_err),
        ("z_err_uncompensated", |r| r.z_err_uncompensated),
        ("z_err_compensated", |r| r.z_err_compensated),
    ];
    let peak = |rows: &[ErrorRow], f: fn(&ErrorRow) -> f64| {
        rows.iter().map(|r| f(r).abs()).fold(0.0, f64::max)
    };
    let rms = |rows: &[ErrorRow], f: fn(&ErrorRow) -> f64| {
        (rows.iter().map(|r| f(r) * f(r)).sum::<f64>() / rows.len().max(1) as f64).sqrt()
    };

    let columns: Vec<ColumnComparison> = fields
        .iter()
        .map(|(name, f)| ColumnComparison {
            name: name.to_string(),
            peak_a: peak(&a, *f),
            rms_a: rms(&a, *f),
            peak_b: peak(&b, *f),
            rms_b: rms(&b, *f),
            peak_delta: peak(&b, *f) - peak(&a, *f),
            rms_delta: rms(&b, *f) - rms(&a, *f),
            deltas: a.iter().zip(&b).map(|(x, y)| f(x) - f(y)).collect(),
        })
        .collect();
    let peak_z_error_reduction = columns
        .iter()
        .find(|c| c.name == "z_err_compensated")
        .map(|c| c.peak_delta)
        .unwrap_or(0.0);

    Ok(Comparison {
        schema_version: 1,
        samples: a.len(),
        t: a.iter().map(|r| r.t).collect(),
        columns,
        peak_z_error_reduction,
    })
}

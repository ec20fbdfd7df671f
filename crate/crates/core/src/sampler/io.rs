//! `.samples` files: `rows × cols` little-endian f64 values in row-major
//! order with no header, next to a JSON sidecar at `<path>.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{SampleSet, SamplerError};

pub const SIDECAR_FORMAT: &str = "nearopt-samples/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub dtype: String,
    pub byte_order: String,
    pub layout: String,
    pub rows: usize,
    pub cols: usize,
    pub variables: Vec<String>,
    pub units: Vec<String>,
    pub seed: u64,
    pub hull_id: String,
    #[serde(default)]
    pub carrier_runs: Vec<(String, usize)>,
    /// Evaluated rows only; `null` marks an infeasible pin.
    #[serde(default)]
    pub costs: Vec<(usize, Option<f64>)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SamplerError + '_ {
    move |source| SamplerError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl Sidecar {
    pub fn of(set: &SampleSet) -> Self {
        let costs = set
            .cost
            .as_ref()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_nan())
                    .map(|(i, &v)| (i, v.is_finite().then_some(v)))
                    .collect()
            })
            .unwrap_or_default();
        Sidecar {
            format: SIDECAR_FORMAT.into(),
            dtype: "f64".into(),
            byte_order: "little-endian".into(),
            layout: "row-major".into(),
            rows: set.len(),
            cols: set.dim(),
            variables: set.variables.clone(),
            units: set.units.clone(),
            seed: set.seed,
            hull_id: set.hull_id.clone(),
            carrier_runs: set.carrier_runs.clone(),
            costs,
            labels: set.labels.clone(),
        }
    }
}

/// Writes `path` and its sidecar.
pub fn write_samples(path: &Path, set: &SampleSet) -> Result<(), SamplerError> {
    let mut bytes = Vec::with_capacity(set.matrix.len() * 8);
    for v in &set.matrix {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, &bytes).map_err(io_err(path))?;
    let side = sidecar_path(path);
    let mut json = serde_json::to_vec_pretty(&Sidecar::of(set))?;
    json.push(b'\n');
    fs::write(&side, json).map_err(io_err(&side))?;
    Ok(())
}

pub fn read_samples(path: &Path) -> Result<SampleSet, SamplerError> {
    let side = sidecar_path(path);
    let meta: Sidecar = serde_json::from_slice(&fs::read(&side).map_err(io_err(&side))?)?;
    if meta.format != SIDECAR_FORMAT || meta.dtype != "f64" || meta.byte_order != "little-endian" || meta.layout != "row-major" {
        return Err(SamplerError::Format(format!("unsupported layout in {}", side.display())));
    }
    if meta.variables.len() != meta.cols || meta.units.len() != meta.cols {
        return Err(SamplerError::Format("variable list does not match column count".into()));
    }
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.len() != meta.rows * meta.cols * 8 {
        return Err(SamplerError::Format(format!(
            "{} bytes for {} × {} values",
            bytes.len(),
            meta.rows,
            meta.cols
        )));
    }
    let matrix: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect();
    if meta.carrier_runs.iter().map(|r| r.1).sum::<usize>() != meta.rows && !meta.carrier_runs.is_empty() {
        return Err(SamplerError::Format("carrier runs do not cover all rows".into()));
    }
    let cost = if meta.costs.is_empty() {
        None
    } else {
        let mut c = vec![f64::NAN; meta.rows];
        for (i, v) in meta.costs {
            *c.get_mut(i).ok_or_else(|| SamplerError::Format(format!("cost row {i} out of range")))? =
                v.unwrap_or(f64::INFINITY);
        }
        Some(c)
    };
    if meta.labels.as_ref().is_some_and(|l| l.len() != meta.rows) {
        return Err(SamplerError::Format("label count does not match rows".into()));
    }
    Ok(SampleSet {
        variables: meta.variables,
        units: meta.units,
        matrix,
        carrier_runs: meta.carrier_runs,
        cost,
        labels: meta.labels,
        seed: meta.seed,
        hull_id: meta.hull_id,
    })
}

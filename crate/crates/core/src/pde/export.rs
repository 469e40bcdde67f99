use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Grid, LevelStats, PdeSolution, StrategySurface};
use crate::model::ModelParams;
use crate::{Error, Result};

/// One row of `surface.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRecord {
    pub k: usize,
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub phi: f64,
    pub pi1: f64,
    pub pi2: f64,
}

/// JSON sidecar written next to the surface CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMetadata {
    pub grid: Grid,
    pub model: ModelParams,
    /// Level `k` is physical time `horizon - k dt`.
    pub time_convention: String,
    /// Controls on edge nodes use one-sided differences.
    pub low_confidence_nodes: String,
    pub solver: Vec<LevelStats>,
}

/// Writes `csv_path` and its `.json` sidecar; returns the sidecar path.
pub fn write_surface(
    csv_path: &Path,
    sol: &PdeSolution,
    surface: &StrategySurface,
    params: &ModelParams,
) -> Result<PathBuf> {
    if surface.pi1.dim() != sol.phi.dim() {
        return Err(Error::ShapeMismatch(format!(
            "surface {:?} vs solution {:?}",
            surface.pi1.dim(),
            sol.phi.dim()
        )));
    }
    let g = &sol.grid;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(csv_path)?));
    w.write_record(["k", "i", "j", "x", "y", "z", "phi", "pi1", "pi2"])?;
    for ((k, i, j), &phi) in sol.phi.indexed_iter() {
        // Display for f64 is the shortest string that parses back exactly
        w.write_record([
            k.to_string(),
            i.to_string(),
            j.to_string(),
            g.x(i).to_string(),
            g.y(j).to_string(),
            sol.z_field[[k, i, j]].to_string(),
            phi.to_string(),
            surface.pi1[[k, i, j]].to_string(),
            surface.pi2[[k, i, j]].to_string(),
        ])?;
    }
    w.flush()?;

    let meta = SurfaceMetadata {
        grid: *g,
        model: *params,
        time_convention: "level k is t = horizon - k * dt".into(),
        low_confidence_nodes: "i in {0, I-1} or j in {0, J-1}".into(),
        solver: sol.stats.clone(),
    };
    let json_path = csv_path.with_extension("json");
    let mut f = BufWriter::new(File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(json_path)
}

pub fn read_surface_csv(path: &Path) -> Result<Vec<SurfaceRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

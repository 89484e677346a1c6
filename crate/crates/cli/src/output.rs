//! JSON documents written by the commands, and atomic file output.
//!
//! Floats are written in shortest round-trip form, so re-parsing a document
//! reproduces every coordinate bit for bit.

use std::io::Write;
use std::path::Path;

use curvebump::inference::ConfidenceMargin;
use curvebump::{Bandwidth, BoundaryGeometry, Functional, GridSpec};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Piece {
    Points { coordinates: Vec<Vec<f64>> },
    Polyline { closed: bool, vertices: Vec<[f64; 2]> },
    Mesh { vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]> },
}

pub fn pieces(geometry: &BoundaryGeometry) -> Vec<Piece> {
    match geometry {
        BoundaryGeometry::Points { points } if points.is_empty() => Vec::new(),
        BoundaryGeometry::Points { points } => vec![Piece::Points {
            coordinates: points.iter().map(|&p| vec![p]).collect(),
        }],
        BoundaryGeometry::Polylines { polylines } => polylines
            .iter()
            .map(|l| Piece::Polyline {
                closed: l.closed,
                vertices: l.vertices.clone(),
            })
            .collect(),
        BoundaryGeometry::Mesh { mesh } if mesh.triangles.is_empty() => Vec::new(),
        BoundaryGeometry::Mesh { mesh } => vec![Piece::Mesh {
            vertices: mesh.vertices.clone(),
            triangles: mesh.triangles.clone(),
        }],
    }
}

/// Node mask in grid order, `1` inside.
pub fn mask_bits(mask: &[bool]) -> Vec<u8> {
    mask.iter().map(|&m| u8::from(m)).collect()
}

/// Everything needed to re-run a command.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub input: String,
    pub columns: Vec<String>,
    pub functional: Functional,
    pub bandwidth: String,
    pub grid: Option<String>,
    pub bounds: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resample_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaussian_constant: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Region {
    pub pieces: Vec<Piece>,
    pub components: usize,
    pub mask: Vec<u8>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BumpDocument {
    pub schema_version: u32,
    pub command: &'static str,
    pub dimension: usize,
    pub functional: Functional,
    pub sign_selector: u8,
    pub bandwidth: Bandwidth,
    pub grid: GridSpec,
    pub sample_size: usize,
    pub pieces: Vec<Piece>,
    pub components: usize,
    pub mask: Vec<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<ConfidenceMargin>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<Region>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<Region>,
    /// Smallest Hessian eigenvalue gap on the boundary; absent when not
    /// applicable (d = 1, non-eigenvalue functionals, empty boundary).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalue_separation: Option<f64>,
    pub low_replicate: bool,
    pub warnings: Vec<String>,
    pub config: ConfigEcho,
}

pub fn to_json<T: Serialize>(doc: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(doc)
        .map_err(|e| CliError::Data(format!("cannot serialize output: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::write(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::write(path, e))?;
    tmp.persist(path).map_err(|e| CliError::write(path, e.error))?;
    Ok(())
}

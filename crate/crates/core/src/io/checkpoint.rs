//! Binary checkpoints: magic bytes, a little-endian `u32` format version, a
//! `u64` header length, a JSON header, then the coefficient payload as
//! little-endian `f64` (high parts, then low parts when present).

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::continuation::BranchPoint;
use crate::error::{Error, Result};
use crate::solvers::{NewtonReport, NewtonStatus};
use crate::spline::{FieldCoefficients, SplineSpace};

pub const MAGIC: &[u8; 8] = b"GRDLCKPT";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDigest {
    pub status: NewtonStatus,
    pub iterations: usize,
    pub residual_norm: f64,
}

impl From<&NewtonReport> for ReportDigest {
    fn from(r: &NewtonReport) -> Self {
        Self { status: r.status, iterations: r.iterations, residual_norm: r.residual_norm }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub space: SplineSpace,
    pub b5: Option<f64>,
    pub l: f64,
    pub energy: f64,
    pub report: ReportDigest,
    pub smallest_eigs: Vec<f64>,
    pub config_hash: String,
    pub values: usize,
    pub low: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub coeffs: FieldCoefficients,
}

impl Checkpoint {
    pub fn from_point(point: &BranchPoint, config_hash: &str) -> Self {
        Self {
            header: CheckpointHeader {
                space: point.coeffs.space.clone(),
                b5: point.b5,
                l: point.l,
                energy: point.energy,
                report: (&point.report).into(),
                smallest_eigs: point.smallest_eigs.clone(),
                config_hash: config_hash.to_string(),
                values: point.coeffs.values.len(),
                low: point.coeffs.low.len(),
            },
            coeffs: point.coeffs.clone(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let mut out = Vec::with_capacity(20 + header.len() + 8 * (self.coeffs.values.len() + self.coeffs.low.len()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for v in self.coeffs.values.iter().chain(&self.coeffs.low) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported format version {version}")));
        }
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let body = &bytes[20..];
        if body.len() < hlen {
            return Err(bad("truncated header"));
        }
        let header: CheckpointHeader =
            serde_json::from_slice(&body[..hlen]).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let payload = &body[hlen..];
        if header.values != header.space.dof_count() || (header.low != 0 && header.low != header.values) {
            return Err(bad("coefficient counts do not match the space"));
        }
        if payload.len() != 8 * (header.values + header.low) {
            return Err(bad("payload length does not match header"));
        }
        let mut floats = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let values: Vec<f64> = floats.by_ref().take(header.values).collect();
        let low: Vec<f64> = floats.collect();
        let coeffs = FieldCoefficients { space: header.space.clone(), values, low };
        Ok(Self { header, coeffs })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Fails unless the checkpoint was written under `hash` or `ignore` is set.
    pub fn check_hash(&self, hash: &str, ignore: bool) -> Result<()> {
        if self.header.config_hash != hash && !ignore {
            return Err(Error::Checkpoint(format!(
                "config hash mismatch: checkpoint {} vs current {hash}",
                self.header.config_hash
            )));
        }
        Ok(())
    }

    /// Branch point described by the checkpoint. The full Newton history is
    /// not stored, only its digest.
    pub fn to_point(&self) -> BranchPoint {
        let h = &self.header;
        BranchPoint {
            b5: h.b5,
            l: h.l,
            coeffs: self.coeffs.clone(),
            energy: h.energy,
            stable: if h.smallest_eigs.is_empty() { None } else { Some(h.smallest_eigs.iter().all(|v| *v > 0.0)) },
            smallest_eigs: h.smallest_eigs.clone(),
            report: NewtonReport {
                status: h.report.status,
                iterations: h.report.iterations,
                residual_norm: h.report.residual_norm,
                energy: h.energy,
                residual_history: Vec::new(),
                step_lengths: Vec::new(),
                linear_iterations: Vec::new(),
            },
        }
    }
}

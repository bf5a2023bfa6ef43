//! Sweep records: the interchange format between the instrument (or the
//! simulator) and the analysis chain.
//!
//! One JSON object per sweep with per-point arrays `a_pz_m,
//! delta_omega_rad_s, V_ac, V_ex, t_s` and the per-sweep calibration
//! scalars. `a0_true` is only ever written by the simulator.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("record io: {0}")]
    Io(String),
    #[error("record format v{found} is not supported (expected v{expected})")]
    Version { found: u32, expected: u32 },
    #[error("malformed record: {0}")]
    Malformed(String),
}

pub const RECORD_VERSION: u32 = 1;

/// One point of a distance sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SweepPoint {
    /// Calibrated piezo position [m]; the separation is `a = a0 - a_pz`.
    pub a_pz_m: f64,
    /// PLL frequency shift relative to the sweep's calibrated omega0 [rad/s].
    pub delta_omega_rad_s: f64,
    /// Compensation voltage amplitude [V].
    pub v_ac: f64,
    /// Excitation voltage amplitude [V].
    pub v_ex: f64,
    /// Timestamp [s].
    pub t_s: f64,
    /// Statistical error on the frequency shift [rad/s].
    pub sigma_delta_omega: f64,
    /// Statistical error on the voltages [V].
    pub sigma_v: f64,
}

/// One distance sweep with its calibration values.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepRecord {
    pub version: u32,
    /// Sweep index within the run.
    pub index: usize,
    pub points: Vec<SweepPoint>,
    /// Resonance frequency calibrated right before the sweep [rad/s].
    pub omega0_cal: f64,
    /// Statistical error of the calibration [rad/s].
    pub sigma_omega0: f64,
    /// Planted ground truth, present in simulator output only [m].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a0_true: Option<f64>,
    /// Set when the sweep ended early (e.g. pull-in).
    #[serde(default)]
    pub truncated: bool,
}

impl SweepRecord {
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.version != RECORD_VERSION {
            return Err(RecordError::Version {
                found: self.version,
                expected: RECORD_VERSION,
            });
        }
        if self.points.is_empty() {
            return Err(RecordError::Malformed("sweep has no points".into()));
        }
        if !self.points.windows(2).all(|w| w[1].t_s > w[0].t_s) {
            return Err(RecordError::Malformed(
                "timestamps must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Timestamp anchoring the sweep's a0 interpolation: point 16 when the
    /// sweep is long enough, else the middle point.
    pub fn center_time(&self) -> f64 {
        let idx = if self.points.len() >= 16 {
            15
        } else {
            self.points.len() / 2
        };
        self.points[idx].t_s
    }

    pub fn start_time(&self) -> f64 {
        self.points.first().map(|p| p.t_s).unwrap_or(0.0)
    }
}

/// A set of sweepsature with per-sweep screening state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSet {
    pub sweeps: Vec<SweepRecord>,
    /// Fitted piezo offset per sweep [m], aligned with `sweeps`.
    pub a0: Vec<f64>,
    /// Standard error of each fitted offset [m].
    pub sigma_a0: Vec<f64>,
    /// Machine-readable rejection reasons, empty when the sweep is kept.
    pub flags: Vec<Vec<RejectionReason>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectionReason {
    /// |delta a0| between subsequent sweeps above 5 nm.
    Da0Gt5nm,
    /// |delta a0(i) - delta a0(i-1)| above 3 nm.
    Dda0Gt3nm,
    /// Offset fit failed outright.
    A0FitFailed,
}

impl std::fmt::Display for RejectionReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let code = match self {
            Self::Da0Gt5nm => "DA0_GT_5NM",
            Self::Dda0Gt3nm => "DDA0_GT_3NM",
            Self::A0FitFailed => "A0_FIT_FAILED",
        };
        f.write_str(code)
    }
}

impl RunSet {
    pub fn accepted_indices(&self) -> Vec<usize> {
        (0..self.sweeps.len())
            .filter(|&i| self.flags[i].is_empty())
            .collect()
    }
}

/// Read newline-delimited sweep records.
pub fn read_sweeps<R: Read>(reader: R) -> Result<Vec<SweepRecord>, RecordError> {
    let mut text = String::new();
    let mut r = reader;
    r.read_to_string(&mut text)
        .map_err(|e| RecordError::Io(e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: SweepRecord = serde_json::from_str(line)
            .map_err(|e| RecordError::Malformed(format!("line {}: {e}", i + 1)))?;
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_sweeps_path(path: &Path) -> Result<Vec<SweepRecord>, RecordError> {
    let f = std::fs::File::open(path)
        .map_err(|e| RecordError::Io(format!("{}: {e}", path.display())))?;
    read_sweeps(std::io::BufReader::new(f))
}

/// Write sweep records as one JSON object per line.
pub fn write_sweeps<W: Write>(mut w: W, sweeps: &[SweepRecord]) -> Result<(), RecordError> {
    for s in sweeps {
        let line = serde_json::to_string(s).map_err(|e| RecordError::Io(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| RecordError::Io(e.to_string()))?;
    }
    Ok(())
}

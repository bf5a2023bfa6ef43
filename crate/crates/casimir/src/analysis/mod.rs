//! Data-handling chain: sweep records in, averaged force-gradient curves
//! and relative reductions with propagated errors out.
//!
//! The steps mirror the measurement protocol: fit the piezo offset of
//! every sweep from the recorded electrostatic signal, discard sweeps with
//! excessive offset drift, spline-interpolate the surviving offsets and
//! resonance calibrations over time, convert shifts to gradients and
//! subtract the known electrostatic excitation, average with inverse-
//! variance weights, and form sample/reference reductions.

pub mod a0;
pub mod average;
pub mod drift;
pub mod pipeline;
pub mod reduction;
pub mod screen;

pub use a0::{fit_a0, A0Fit, A0FitModel, VoltageChannel};
pub use average::weighted_running_mean;
pub use drift::{interpolate_drift, CorrectedPoint, CorrectedRun, CorrectedSweep};
pub use pipeline::{error_budget, gradient_pipeline, ErrorBudget, ErrorBudgetInputs, GradientPoint};
pub use reduction::{relative_reduction, ReductionReport};
pub use screen::screen_sweeps;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("calibration quality: {0}")]
    CalibrationQuality(String),
    #[error("not enough accepted sweeps: {0}")]
    NotEnoughSweeps(String),
    #[error("window {lo:.3e}..{hi:.3e} m lies outside the curve overlap {olo:.3e}..{ohi:.3e} m")]
    WindowOutsideOverlap { lo: f64, hi: f64, olo: f64, ohi: f64 },
    #[error("empty result: {0}")]
    Empty(String),
    #[error(transparent)]
    Record(#[from] crate::records::RecordError),
}

/// Averaged curve with inverse-variance weighted means in both axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AveragedCurve {
    /// Separation [m], increasing.
    pub a: Vec<f64>,
    /// Weighted-mean value per window (N/m for gradient curves).
    pub value: Vec<f64>,
    /// Standard error of the window mean.
    pub sigma: Vec<f64>,
    /// Standard error of the window-mean separation.
    pub sigma_a: Vec<f64>,
    /// Number of raw points per window.
    pub window_width: usize,
}

impl AveragedCurve {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if self.a.is_empty() {
            return Err(AnalysisError::Empty("averaged curve has no points".into()));
        }
        if !self.a.windows(2).all(|w| w[1] >= w[0]) {
            return Err(AnalysisError::Empty(
                "averaged curve separations must increase".into(),
            ));
        }
        Ok(())
    }
}

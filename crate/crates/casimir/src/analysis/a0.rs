//! Piezo-offset determination from the recorded electrostatic signal.
//!
//! The excitation feedback holds the electrostatic signal amplitude
//! constant, which makes the applied voltage proportional to the true
//! separation `a = a0(t) - a_pz`. A weighted linear fit of the recorded
//! voltage against piezo position and time,
//!
//! ```text
//! V = b0 + b1 a_pz + b2 t,
//! ```
//!
//! absorbs a linear in-sweep drift and anchors the offset estimate at the
//! sweep's center point: `a0 = -(b0 + b2 t_center)/b1`. The drift
//! interpolation downstream assumes exactly that anchoring.

use super::AnalysisError;
use crate::records::SweepRecord;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoltageChannel {
    Excitation,
    Compensation,
}

/// Which recorded signal carries the feedback's distance dependence, and
/// the quality gates of the fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct A0FitModel {
    pub channel: VoltageChannel,
    /// Reject when the weighted chi^2 per point exceeds this while the
    /// residuals are also large relative to the signal.
    pub max_chi2_per_point: f64,
    /// Relative residual above which a large chi^2 becomes a rejection.
    pub max_relative_residual: f64,
    /// Reject when the distance slope is not significant at this many
    /// sigma.
    pub min_slope_significance: f64,
}

impl Default for A0FitModel {
    fn default() -> Self {
        Self {
            channel: VoltageChannel::Excitation,
            max_chi2_per_point: 25.0,
            max_relative_residual: 0.01,
            min_slope_significance: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct A0Fit {
    /// Offset at the sweep's center timestamp [m].
    pub a0: f64,
    pub sigma_a0: f64,
    pub chi2_per_point: f64,
}

/// Weighted linear fit of the chosen voltage channel against piezo
/// position and time.
pub fn fit_a0(sweep: &SweepRecord, model: &A0FitModel) -> Result<A0Fit, AnalysisError> {
    if sweep.points.len() < 4 {
        return Err(AnalysisError::CalibrationQuality(
            "offset fit needs at least 4 points".into(),
        ));
    }
    let t_center = sweep.center_time();
    let volt = |p: &crate::records::SweepPoint| match model.channel {
        VoltageChannel::Excitation => p.v_ex,
        VoltageChannel::Compensation => p.v_ac,
    };

    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    let mut v_scale = 0.0;
    for p in &sweep.points {
        let sigma = p.sigma_v.max(1e-12);
        let w = 1.0 / (sigma * sigma);
        // time measured from the center anchor keeps b0 interpretable
        let row = [1.0, p.a_pz_m, p.t_s - t_center];
        for i in 0..3 {
            for j in 0..3 {
                ata[(i, j)] += w * row[i] * row[j];
            }
            atb[i] += w * row[i] * volt(p);
        }
        v_scale += volt(p).abs();
    }
    v_scale /= sweep.points.len() as f64;
    let chol = ata
        .cholesky()
        .ok_or_else(|| AnalysisError::CalibrationQuality("degenerate design".into()))?;
    let beta = chol.solve(&atb);
    let cov = chol.inverse();

    let (b0, b1): (f64, f64) = (beta[0], beta[1]);
    if b1.abs() < model.min_slope_significance * cov[(1, 1)].sqrt() {
        return Err(AnalysisError::CalibrationQuality(
            "signal shows no significant distance dependence".into(),
        ));
    }

    let mut chi2 = 0.0;
    let mut ss_res = 0.0;
    for p in &sweep.points {
        let sigma = p.sigma_v.max(1e-12);
        let fit = beta[0] + beta[1] * p.a_pz_m + beta[2] * (p.t_s - t_center);
        let r = volt(p) - fit;
        chi2 += (r / sigma) * (r / sigma);
        ss_res += r * r;
    }
    let dof = (sweep.points.len() - 3).max(1) as f64;
    let chi2_per_point = chi2 / sweep.points.len() as f64;
    let rel_residual = (ss_res / sweep.points.len() as f64).sqrt() / v_scale.max(1e-30);
    if chi2_per_point > model.max_chi2_per_point && rel_residual > model.max_relative_residual {
        return Err(AnalysisError::CalibrationQuality(format!(
            "offset fit chi2/point = {chi2_per_point:.2} with relative residual {rel_residual:.2e}"
        )));
    }

    // a0 = -b0/b1 at the center anchor; delta-method error with the
    // formal covariance inflated by sqrt(chi2/dof) when the model floor
    // underestimates the scatter
    let a0 = -b0 / b1;
    let g = Vector3::new(-1.0 / b1, b0 / (b1 * b1), 0.0);
    let var: f64 = (g.transpose() * cov * g)[(0, 0)];
    let var = var.max(0.0);
    let scale = (chi2 / dof).max(1.0).sqrt();
    Ok(A0Fit {
        a0,
        sigma_a0: var.sqrt() * scale,
        chi2_per_point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::{simulate_sweep, CantileverParams, NoiseModel, SweepPlan};

    fn law(a: f64) -> f64 {
        2.754e-3 * (100e-9 / a).powi(4)
    }

    #[test]
    fn quiet_sweep_recovers_offset_exactly() {
        let params = CantileverParams::bundled_defaults();
        let rec = simulate_sweep(
            &law,
            &params,
            &SweepPlan::default(),
            &NoiseModel::quiet(),
            1,
            0,
            0.0,
            70e-9,
            0.0,
            params.omega0,
        )
        .unwrap();
        let fit = fit_a0(&rec, &A0FitModel::default()).unwrap();
        assert!(
            (fit.a0 - 70e-9).abs() < 1e-15,
            "a0 = {} vs 70 nm",
            fit.a0
        );
    }

    #[test]
    fn in_sweep_drift_still_anchors_at_the_center() {
        // continuous drift: the fitted offset must be the center-point one
        let params = CantileverParams::bundled_defaults();
        let rate = 4e-9 / 132.0; // 4 nm per sweep duration
        let rec = simulate_sweep(
            &law,
            &params,
            &SweepPlan::default(),
            &NoiseModel::quiet(),
            1,
            0,
            0.0,
            70e-9,
            rate,
            params.omega0,
        )
        .unwrap();
        let fit = fit_a0(&rec, &A0FitModel::default()).unwrap();
        assert!(
            (fit.a0 - 70e-9).abs() < 1e-13,
            "a0 = {} vs 70 nm at the anchor",
            fit.a0
        );
    }

    #[test]
    fn noisy_offset_coverage_is_consistent() {
        // the reported sigma should cover the true value ~68% of the time
        let params = CantileverParams::bundled_defaults();
        let noise = NoiseModel {
            v_noise_rms: 5e-4,
            ..NoiseModel::quiet()
        };
        let mut covered = 0;
        let n_trials = 60;
        for seed in 0..n_trials {
            let rec = simulate_sweep(
                &law,
                &params,
                &SweepPlan::default(),
                &noise,
                seed as u64 + 100,
                0,
                0.0,
                70e-9,
                0.0,
                params.omega0,
            )
            .unwrap();
            let fit = fit_a0(&rec, &A0FitModel::default()).unwrap();
            if (fit.a0 - 70e-9).abs() <= fit.sigma_a0 {
                covered += 1;
            }
        }
        let frac = covered as f64 / n_trials as f64;
        assert!(
            (0.5..=0.85).contains(&frac),
            "coverage {frac} outside the 68% expectation band"
        );
    }

    #[test]
    fn constant_signal_is_a_quality_error() {
        let params = CantileverParams::bundled_defaults();
        let mut rec = simulate_sweep(
            &law,
            &params,
            &SweepPlan::default(),
            &NoiseModel::quiet(),
            1,
            0,
            0.0,
            70e-9,
            0.0,
            params.omega0,
        )
        .unwrap();
        for p in &mut rec.points {
            p.v_ex = 0.25;
            p.sigma_v = 1e-4;
        }
        assert!(matches!(
            fit_a0(&rec, &A0FitModel::default()),
            Err(AnalysisError::CalibrationQuality(_))
        ));
    }
}

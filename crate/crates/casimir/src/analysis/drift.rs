//! Drift interpolation: natural cubic splines over the accepted sweeps'
//! offsets (anchored at each sweep's center point, number 16) and
//! resonance calibrations (anchored at the sweep start), evaluated at
//! every point's timestamp.

use super::AnalysisError;
use crate::math::spline::CubicSpline;
use crate::records::RunSet;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CorrectedPoint {
    /// Drift-corrected separation [m].
    pub a: f64,
    pub sigma_a: f64,
    /// Interpolated resonance frequency at this instant [rad/s].
    pub omega0: f64,
    pub sigma_omega0: f64,
    /// Frequency shift relative to the interpolated omega0 [rad/s].
    pub delta_omega: f64,
    pub sigma_delta_omega: f64,
    pub v_ac: f64,
    pub v_ex: f64,
    pub sigma_v: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectedSweep {
    pub index: usize,
    pub points: Vec<CorrectedPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectedRun {
    pub sweeps: Vec<CorrectedSweep>,
}

/// Interpolate offsets and resonance calibrations over the accepted
/// sweeps and correct every point.
///
/// With a single accepted sweep the offset falls back to a constant with
/// its uncertainty doubled.
pub fn interpolate_drift(runset: &RunSet) -> Result<CorrectedRun, AnalysisError> {
    let accepted = runset.accepted_indices();
    if accepted.is_empty() {
        return Err(AnalysisError::NotEnoughSweeps(
            "no sweeps survived screening".into(),
        ));
    }
    let anchors_a0: Vec<(f64, f64)> = accepted
        .iter()
        .map(|&i| (runset.sweeps[i].center_time(), runset.a0[i]))
        .collect();
    let anchors_w0: Vec<(f64, f64)> = accepted
        .iter()
        .map(|&i| (runset.sweeps[i].start_time(), runset.sweeps[i].omega0_cal))
        .collect();

    enum Interp {
        Constant(f64),
        Spline(CubicSpline),
    }
    impl Interp {
        fn eval(&self, t: f64) -> f64 {
            match self {
                Interp::Constant(v) => *v,
                Interp::Spline(s) => s.eval(t),
            }
        }
    }
    let build = |anchors: &[(f64, f64)]| -> Interp {
        if anchors.len() == 1 {
            Interp::Constant(anchors[0].1)
        } else {
            Interp::Spline(CubicSpline::natural(
                anchors.iter().map(|p| p.0).collect(),
                anchors.iter().map(|p| p.1).collect(),
            ))
        }
    };
    let a0_of_t = build(&anchors_a0);
    let w0_of_t = build(&anchors_w0);
    let single = accepted.len() == 1;

    let mut sweeps = Vec::with_capacity(accepted.len());
    for &i in &accepted {
        let rec = &runset.sweeps[i];
        let sigma_a0 = if single {
            2.0 * runset.sigma_a0[i]
        } else {
            runset.sigma_a0[i]
        };
        let points = rec
            .points
            .iter()
            .map(|p| {
                let a0_t = a0_of_t.eval(p.t_s);
                let w0_t = w0_of_t.eval(p.t_s);
                CorrectedPoint {
                    a: a0_t - p.a_pz_m,
                    sigma_a: sigma_a0,
                    omega0: w0_t,
                    sigma_omega0: rec.sigma_omega0,
                    // shift was recorded against the sweep's calibration
                    delta_omega: p.delta_omega_rad_s + rec.omega0_cal - w0_t,
                    sigma_delta_omega: p.sigma_delta_omega,
                    v_ac: p.v_ac,
                    v_ex: p.v_ex,
                    sigma_v: p.sigma_v,
                    t: p.t_s,
                }
            })
            .collect();
        sweeps.push(CorrectedSweep { index: i, points });
    }
    Ok(CorrectedRun { sweeps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::a0::A0FitModel;
    use crate::analysis::screen::screen_sweeps;
    use crate::instrument::{simulate_run, CantileverParams, NoiseModel, RunPlan};

    fn law(a: f64) -> f64 {
        2.754e-3 * (100e-9 / a).powi(4)
    }

    #[test]
    fn constant_offset_is_time_independent() {
        let params = CantileverParams::bundled_defaults();
        let plan = RunPlan {
            n_sweeps: 5,
            ..RunPlan::default()
        };
        let sweeps = simulate_run(&law, &params, &plan, &NoiseModel::quiet(), 1).unwrap();
        let rs = screen_sweeps(sweeps, &A0FitModel::default()).unwrap();
        let run = interpolate_drift(&rs).unwrap();
        for sw in &run.sweeps {
            let rec = &rs.sweeps[sw.index];
            for (cp, p) in sw.points.iter().zip(&rec.points) {
                assert!((cp.a - (70e-9 - p.a_pz_m)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn linear_drift_is_removed_to_sub_angstrom() {
        let params = CantileverParams::bundled_defaults();
        let noise = NoiseModel {
            a0_drift_per_sweep: 4e-9, // within the screening thresholds
            ..NoiseModel::quiet()
        };
        let plan = RunPlan {
            n_sweeps: 8,
            ..RunPlan::default()
        };
        let sweeps = simulate_run(&law, &params, &plan, &noise, 2).unwrap();
        let truth: Vec<f64> = sweeps.iter().map(|s| s.a0_true.unwrap()).collect();
        let centers: Vec<f64> = sweeps.iter().map(|s| s.center_time()).collect();
        let rs = screen_sweeps(sweeps, &A0FitModel::default()).unwrap();
        assert!(rs.flags.iter().all(|f| f.is_empty()), "{:?}", rs.flags);
        let run = interpolate_drift(&rs).unwrap();
        // the drift continues within each sweep; the continuous truth is
        // the line through the per-sweep center anchors
        let rate = (truth[7] - truth[0]) / (centers[7] - centers[0]);
        for sw in &run.sweeps {
            let rec = &rs.sweeps[sw.index];
            let mut worst: f64 = 0.0;
            for (cp, p) in sw.points.iter().zip(&rec.points) {
                let a0_t = truth[sw.index] + rate * (p.t_s - centers[sw.index]);
                let a_true = a0_t - p.a_pz_m;
                worst = worst.max((cp.a - a_true).abs());
            }
            assert!(worst < 1e-10, "sweep {}: {worst:.2e} m", sw.index);
        }
    }

    #[test]
    fn omega0_drift_is_tracked() {
        let params = CantileverParams::bundled_defaults();
        let noise = NoiseModel {
            omega0_drift_span: 2.0 * std::f64::consts::PI * 0.08,
            ..NoiseModel::quiet()
        };
        let plan = RunPlan {
            n_sweeps: 10,
            ..RunPlan::default()
        };
        let sweeps = simulate_run(&law, &params, &plan, &noise, 5).unwrap();
        let cals: Vec<f64> = sweeps.iter().map(|s| s.omega0_cal).collect();
        let rs = screen_sweeps(sweeps, &A0FitModel::default()).unwrap();
        let run = interpolate_drift(&rs).unwrap();
        // at each sweep start the interpolated omega0 equals the anchor
        for sw in &run.sweeps {
            let first = &sw.points[0];
            assert!(
                (first.omega0 - cals[sw.index]).abs() < 1e-9,
                "sweep {}",
                sw.index
            );
        }
    }

    #[test]
    fn single_sweep_falls_back_with_widened_sigma() {
        let params = CantileverParams::bundled_defaults();
        let noise = NoiseModel {
            v_noise_rms: 1e-4,
            ..NoiseModel::quiet()
        };
        let plan = RunPlan {
            n_sweeps: 1,
            ..RunPlan::default()
        };
        let sweeps = simulate_run(&law, &params, &plan, &noise, 6).unwrap();
        let rs = screen_sweeps(sweeps, &A0FitModel::default()).unwrap();
        let base_sigma = rs.sigma_a0[0];
        let run = interpolate_drift(&rs).unwrap();
        assert_eq!(run.sweeps.len(), 1);
        assert!((run.sweeps[0].points[0].sigma_a - 2.0 * base_sigma).abs() < 1e-18);
    }
}

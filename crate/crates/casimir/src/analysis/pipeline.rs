//! Gradient extraction with error propagation: the shift-to-gradient
//! conversion per point, subtraction of the known electrostatic
//! excitation, and the per-source statistical budget.

use super::drift::CorrectedRun;
use super::AnalysisError;
use crate::constants::EPS_0;
use crate::instrument::electrostatics::electrostatic_gradient;
use crate::instrument::CantileverParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GradientPoint {
    pub a: f64,
    pub sigma_a: f64,
    /// Casimir force gradient after removing the electrostatic excitation
    /// [N/m], attractive positive.
    pub value: f64,
    /// Per-point statistical error (frequency, resonance, mass, voltage
    /// in quadrature) [N/m].
    pub sigma: f64,
    pub t: f64,
    pub sweep_index: usize,
}

/// Convert a drift-corrected run into per-point Casimir gradients.
///
/// `sigma_mass` propagates the mass-calibration uncertainty; the radius
/// enters only the electrostatic subtraction.
pub fn gradient_pipeline(
    run: &CorrectedRun,
    params: &CantileverParams,
    radius: f64,
    sigma_mass: f64,
) -> Result<Vec<GradientPoint>, AnalysisError> {
    if run.sweeps.is_empty() {
        return Err(AnalysisError::Empty("no corrected sweeps".into()));
    }
    let m = params.mass;
    let mut out = Vec::new();
    for sweep in &run.sweeps {
        for p in &sweep.points {
            let w_shifted = p.omega0 + p.delta_omega;
            let g_tot = m * (p.omega0 * p.omega0 - w_shifted * w_shifted);
            let g_es = electrostatic_gradient(p.a, p.v_ex, radius)
                + electrostatic_gradient(p.a, p.v_ac, radius);
            let value = g_tot - g_es;

            let d_freq = 2.0 * m * w_shifted * p.sigma_delta_omega;
            let d_res = 2.0 * m * w_shifted * p.sigma_omega0;
            let d_mass = if m > 0.0 { g_tot.abs() * sigma_mass / m } else { 0.0 };
            let d_volt = {
                let c = 2.0 * std::f64::consts::PI * EPS_0 * radius / (p.a * p.a);
                let dv_ex = c * p.v_ex.abs() * p.sigma_v;
                let dv_ac = c * p.v_ac.abs() * p.sigma_v;
                (dv_ex * dv_ex + dv_ac * dv_ac).sqrt()
            };
            let sigma =
                (d_freq * d_freq + d_res * d_res + d_mass * d_mass + d_volt * d_volt).sqrt();
            out.push(GradientPoint {
                a: p.a,
                sigma_a: p.sigma_a,
                value,
                sigma,
                t: p.t,
                sweep_index: sweep.index,
            });
        }
    }
    out.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap());
    Ok(out)
}

/// Inputs of the per-source budget at a reference separation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBudgetInputs {
    /// Relative sphere-radius uncertainty.
    pub rel_radius: f64,
    /// Relative effective-mass uncertainty.
    pub rel_mass: f64,
    /// Voltage readout error [V].
    pub sigma_v: f64,
    /// Per-point frequency determination error [rad/s].
    pub sigma_delta_omega: f64,
    /// Resonance calibration error [rad/s].
    pub sigma_omega0: f64,
    /// Distance determination error [m].
    pub sigma_a: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBudget {
    /// (source name, contribution [N/m]).
    pub contributions: Vec<(String, f64)>,
    pub total_statistical: f64,
}

/// Indicative per-source contributions to the gradient at one separation.
///
/// The distance term uses the local power-law slope `dg/da = -4 g / a`;
/// the radius term is the normalization error of the R-scaled comparison.
pub fn error_budget(
    a: f64,
    gradient: f64,
    v_ac: f64,
    v_ex: f64,
    params: &CantileverParams,
    radius: f64,
    inputs: &ErrorBudgetInputs,
) -> ErrorBudget {
    let m = params.mass;
    let w0 = params.omega0;
    let c_v = 2.0 * std::f64::consts::PI * EPS_0 * radius / (a * a);
    let contributions = vec![
        ("sphere radius".to_string(), gradient * inputs.rel_radius),
        ("effective mass".to_string(), gradient * inputs.rel_mass),
        (
            "applied voltages".to_string(),
            ((c_v * v_ac * inputs.sigma_v).powi(2) + (c_v * v_ex * inputs.sigma_v).powi(2)).sqrt(),
        ),
        (
            "frequency measurement".to_string(),
            2.0 * m * w0 * inputs.sigma_delta_omega,
        ),
        (
            "resonance frequency".to_string(),
            2.0 * m * w0 * inputs.sigma_omega0,
        ),
        (
            "distance determination".to_string(),
            4.0 * gradient / a * inputs.sigma_a,
        ),
    ];
    let total_statistical = contributions
        .iter()
        .map(|(_, c)| c * c)
        .sum::<f64>()
        .sqrt();
    ErrorBudget {
        contributions,
        total_statistical,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::a0::A0FitModel;
    use crate::analysis::drift::interpolate_drift;
    use crate::analysis::screen::screen_sweeps;
    use crate::instrument::{simulate_run, NoiseModel, RunPlan};

    fn law(a: f64) -> f64 {
        2.754e-3 * (100e-9 / a).powi(4)
    }

    fn corrected(noise: &NoiseModel, n_sweeps: usize, seed: u64) -> CorrectedRun {
        let params = CantileverParams::bundled_defaults();
        let plan = RunPlan {
            n_sweeps,
            ..RunPlan::default()
        };
        let sweeps = simulate_run(&law, &params, &plan, noise, seed).unwrap();
        let rs = screen_sweeps(sweeps, &A0FitModel::default()).unwrap();
        interpolate_drift(&rs).unwrap()
    }

    #[test]
    fn quiet_pipeline_recovers_the_law() {
        let run = corrected(&NoiseModel::quiet(), 3, 1);
        let params = CantileverParams::bundled_defaults();
        let pts = gradient_pipeline(&run, &params, 77.9e-6, 0.0).unwrap();
        for p in &pts {
            assert!(
                (p.value - law(p.a)).abs() / law(p.a) < 1e-9,
                "a={:.3e}: {} vs {}",
                p.a,
                p.value,
                law(p.a)
            );
        }
    }

    #[test]
    fn electrostatic_subtraction_leaves_small_residual() {
        // voltage noise corrupts the recorded (subtracted) voltages only
        let noise = NoiseModel {
            v_noise_rms: 1e-5,
            ..NoiseModel::quiet()
        };
        let run = corrected(&noise, 3, 2);
        let params = CantileverParams::bundled_defaults();
        let pts = gradient_pipeline(&run, &params, 77.9e-6, 0.0).unwrap();
        // rms relative residual across the run stays below half a percent
        let ss: f64 = pts
            .iter()
            .map(|p| ((p.value - law(p.a)) / law(p.a)).powi(2))
            .sum::<f64>()
            / pts.len() as f64;
        assert!(ss.sqrt() < 5e-3, "rms residual {:.3e}", ss.sqrt());
    }

    #[test]
    fn budget_reproduces_the_instrument_table() {
        // inputs sized to the per-source contributions of the measured
        // instrument at a = 100 nm; their quadrature is 117.1 uN/m, which
        // the table itself rounds to 116.1
        let params = CantileverParams::bundled_defaults();
        let g = 2.754e-3;
        let m = params.mass;
        let w0 = params.omega0;
        let inputs = ErrorBudgetInputs {
            rel_radius: 9.4e-6 / g,
            rel_mass: 78.7e-6 / g,
            sigma_v: 0.05e-6 / (2.0 * std::f64::consts::PI * EPS_0 * 77.9e-6 / 1e-14) / 0.5 / 2f64.sqrt(),
            sigma_delta_omega: 78.4e-6 / (2.0 * m * w0),
            sigma_omega0: 31.8e-6 / (2.0 * m * w0),
            sigma_a: 16.6e-6 / (4.0 * g / 100e-9),
        };
        let budget = error_budget(100e-9, g, 0.5, 0.5, &params, 77.9e-6, &inputs);
        let by_name: std::collections::HashMap<&str, f64> = budget
            .contributions
            .iter()
            .map(|(n, v)| (n.as_str(), *v * 1e6))
            .collect();
        assert!((by_name["effective mass"] - 78.7).abs() < 0.1);
        assert!((by_name["frequency measurement"] - 78.4).abs() < 0.1);
        assert!((by_name["resonance frequency"] - 31.8).abs() < 0.1);
        assert!((by_name["distance determination"] - 16.6).abs() < 0.1);
        assert!((by_name["sphere radius"] - 9.4).abs() < 0.1);
        assert!(
            (budget.total_statistical * 1e6 - 116.1).abs() < 1.5,
            "total {:.1} uN/m",
            budget.total_statistical * 1e6
        );
    }

    #[test]
    fn doubling_voltage_errors_doubles_only_that_term() {
        let params = CantileverParams::bundled_defaults();
        let base = ErrorBudgetInputs {
            rel_radius: 0.003,
            rel_mass: 0.02,
            sigma_v: 1e-4,
            sigma_delta_omega: 0.5,
            sigma_omega0: 0.2,
            sigma_a: 1.5e-10,
        };
        let mut doubled = base.clone();
        doubled.sigma_v *= 2.0;
        let b1 = error_budget(100e-9, 2.754e-3, 0.5, 0.5, &params, 77.9e-6, &base);
        let b2 = error_budget(100e-9, 2.754e-3, 0.5, 0.5, &params, 77.9e-6, &doubled);
        for ((n1, c1), (n2, c2)) in b1.contributions.iter().zip(&b2.contributions) {
            assert_eq!(n1, n2);
            if n1 == "applied voltages" {
                assert!((c2 / c1 - 2.0).abs() < 1e-12);
            } else {
                assert_eq!(c1, c2);
            }
        }
    }
}

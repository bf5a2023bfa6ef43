//! Calibration fits: resonance frequency and phase offset from a drive
//! frequency sweep, effective mass and contact potential from a DC-bias
//! parabola.

use super::electrostatics::{electrostatic_gradient, electrostatic_response_raw};
use super::shift::shift_from_gradient;
use super::{CantileverParams, FrequencySweepRecord, InstrumentError};
use crate::math::lm::{levenberg_marquardt, LmOptions};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Omega0Calibration {
    pub omega0: f64,
    pub phi_off: f64,
    pub gamma: f64,
    pub residual_norm: f64,
}

/// Fit `Arg[F_ES T_Fx](omega; omega0, gamma) + phi_off` to the measured
/// phase of a calibration sweep.
///
/// The sweep must bracket the resonance; a flat phase response cannot be
/// fitted and is reported as a bracket error.
pub fn calibrate_omega0(
    sweep: &FrequencySweepRecord,
    initial: &CantileverParams,
    a_cal: f64,
    v_squared: f64,
    radius: f64,
) -> Result<Omega0Calibration, InstrumentError> {
    if sweep.frequencies.len() < 5 {
        return Err(InstrumentError::FitFailed(
            "sweep needs at least 5 points".into(),
        ));
    }
    let span = sweep
        .phase
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        - sweep.phase.iter().cloned().fold(f64::INFINITY, f64::min);
    if span < 0.5 {
        return Err(InstrumentError::Bracket);
    }
    let mass = initial.mass;
    let gamma0_init = initial.gamma0(a_cal) + initial.gamma1;

    // parameters: [omega0, phi_off, ln gamma]
    let model_phase = move |omega0: f64, gamma: f64, w: f64| {
        let r = electrostatic_response_raw(a_cal, v_squared, w, mass, omega0, gamma, radius);
        r.im.atan2(r.re)
    };
    // unwrap relative to the measured phase branch: the response argument
    // runs 0 -> -pi through resonance, same as the recorded sweep
    let freqs = sweep.frequencies.clone();
    let phases = sweep.phase.clone();
    let resid = move |x: &[f64]| {
        let (omega0, phi_off, gamma) = (x[0], x[1], x[2].exp());
        DVector::from_iterator(
            freqs.len(),
            freqs
                .iter()
                .zip(&phases)
                .map(|(&w, &ph)| model_phase(omega0, gamma, w) + phi_off - ph),
        )
    };
    let x0 = [initial.omega0, 0.0, gamma0_init.ln()];
    let (x, rep) = levenberg_marquardt(&resid, None, &x0, &LmOptions::default());
    if !rep.converged {
        return Err(InstrumentError::FitFailed(format!(
            "phase fit did not converge (residual {:.3e})",
            rep.residual_norm
        )));
    }
    let omega0 = x[0];
    let (w_lo, w_hi) = (
        sweep.frequencies.first().copied().unwrap(),
        sweep.frequencies.last().copied().unwrap(),
    );
    if !(omega0 > w_lo && omega0 < w_hi) {
        return Err(InstrumentError::Bracket);
    }
    Ok(Omega0Calibration {
        omega0,
        phi_off: x[1],
        gamma: x[2].exp(),
        residual_norm: rep.residual_norm,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassCalibration {
    pub mass: f64,
    /// Contact potential (parabola vertex) [V].
    pub v0: f64,
    /// Frequency offset absorbed by the fit [rad/s].
    pub omega_off: f64,
    pub residual_norm: f64,
}

/// Fit the frequency-shift parabola recorded while sweeping a DC bias at
/// known separation: `delta_omega(V) = shift(m, es_gradient(V - V0)) +
/// omega_off`.
pub fn calibrate_mass(
    parabola: &[(f64, f64)],
    a: f64,
    omega0: f64,
    radius: f64,
) -> Result<MassCalibration, InstrumentError> {
    let mut volts: Vec<f64> = parabola.iter().map(|p| p.0).collect();
    volts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    volts.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    if volts.len() < 5 {
        return Err(InstrumentError::FitFailed(
            "need at least 5 distinct bias voltages".into(),
        ));
    }

    // quadratic regression for the starting point
    let n = parabola.len();
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(v, dw) in parabola {
        let row = [v * v, v, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * dw;
        }
    }
    let m3 = nalgebra::Matrix3::from_fn(|i, j| ata[i][j]);
    let b3 = nalgebra::Vector3::from_row_slice(&atb);
    let sol = m3
        .lu()
        .solve(&b3)
        .ok_or_else(|| InstrumentError::FitFailed("degenerate bias sweep".into()))?;
    let (c2, c1) = (sol[0], sol[1]);
    if !(c2 < 0.0) {
        return Err(InstrumentError::FitFailed(
            "bias sweep has no downward curvature (collinear input?)".into(),
        ));
    }
    let v0_init = -c1 / (2.0 * c2);
    // small-signal curvature: c2 = -pi eps0 R / (2 m w0 a^2)
    let mass_init =
        -std::f64::consts::PI * crate::constants::EPS_0 * radius / (2.0 * c2 * omega0 * a * a);
    if !(mass_init > 0.0) {
        return Err(InstrumentError::FitFailed("non-physical mass estimate".into()));
    }

    let data: Vec<(f64, f64)> = parabola.to_vec();
    let resid = move |x: &[f64]| {
        let (ln_m, v0, w_off) = (x[0], x[1], x[2]);
        let m = ln_m.exp();
        DVector::from_iterator(
            n,
            data.iter().map(|&(v, dw)| {
                let g = electrostatic_gradient(a, v - v0, radius);
                let model = match shift_from_gradient(m, omega0, g) {
                    Ok(s) => s + w_off,
                    Err(_) => 1e6, // pull-in inside the fit: huge residual
                };
                model - dw
            }),
        )
    };
    let x0 = [mass_init.ln(), v0_init, 0.0];
    let (x, rep) = levenberg_marquardt(&resid, None, &x0, &LmOptions::default());
    if !rep.converged {
        return Err(InstrumentError::FitFailed(format!(
            "mass fit did not converge (residual {:.3e})",
            rep.residual_norm
        )));
    }
    Ok(MassCalibration {
        mass: x[0].exp(),
        v0: x[1],
        omega_off: x[2],
        residual_norm: rep.residual_norm,
    })
}

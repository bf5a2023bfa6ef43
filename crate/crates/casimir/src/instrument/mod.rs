//! Lumped-parameter model of the sphere-on-cantilever AFM operated in air:
//! frequency-shift to force-gradient conversion, electrostatic calibration,
//! the damped equation of motion with separation-dependent squeeze-film
//! damping, small-signal transfer functions, and a sweep simulator.

pub mod calibrate;
pub mod electrostatics;
pub mod eom;
pub mod shift;
pub mod simulate;

pub use calibrate::{calibrate_mass, calibrate_omega0, MassCalibration, Omega0Calibration};
pub use electrostatics::{electrostatic_gradient, electrostatic_response};
pub use eom::{
    eom_response, resonance_and_phase, transfer_function, DriveAmplitudes, DriveSource,
    OperatingPoint, ResonancePhase,
};
pub use shift::{gradient_from_shift, shift_from_gradient};
pub use simulate::{simulate_run, simulate_sweep, NoiseModel, RunPlan, SweepPlan};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstrumentError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("pull-in: force gradient {dfda:.3e} N/m reaches the spring constant {k:.3e} N/m")]
    PullIn { dfda: f64, k: f64 },
    #[error("resonance not bracketed by the sweep")]
    Bracket,
    #[error("calibration fit failed: {0}")]
    FitFailed(String),
}

/// Lumped mechanical cantilever model.
///
/// The spring constant is tied to `k = m omega0^2` at construction. The
/// gap-side damping follows `gamma0(a) = C a^-n`; `n = 1` for a spherical
/// probe in air (slip effects would reduce it slightly, which is ignored
/// here and the exponent left configurable).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CantileverParams {
    /// Effective mass [kg].
    pub mass: f64,
    /// Spring constant [N/m], always `mass * omega0^2`.
    pub spring_k: f64,
    /// Free resonance [rad/s].
    pub omega0: f64,
    /// Base-side damping [kg/s].
    pub gamma1: f64,
    /// Squeeze-film prefactor C [kg m^n / s].
    pub gamma0_coeff: f64,
    /// Squeeze-film exponent n.
    pub gamma0_exponent: f64,
}

impl CantileverParams {
    pub fn new(
        mass: f64,
        omega0: f64,
        gamma1: f64,
        gamma0_coeff: f64,
        gamma0_exponent: f64,
    ) -> Result<Self, InstrumentError> {
        if !(mass > 0.0 && omega0 > 0.0) {
            return Err(InstrumentError::InvalidParameter(
                "mass and omega0 must be positive".into(),
            ));
        }
        if gamma1 < 0.0 || gamma0_coeff < 0.0 {
            return Err(InstrumentError::InvalidParameter(
                "damping coefficients must be non-negative".into(),
            ));
        }
        Ok(Self {
            mass,
            spring_k: mass * omega0 * omega0,
            omega0,
            gamma1,
            gamma0_coeff,
            gamma0_exponent,
        })
    }

    /// Measured cantilever of the bundled instrument: m = 1.871e-8 kg,
    /// f0 = 609.07 Hz, air damping split between the base side and a
    /// squeeze-film term sized for the 77.9 um sphere.
    pub fn bundled_defaults() -> Self {
        Self::new(
            1.871e-8,
            2.0 * std::f64::consts::PI * 609.07,
            2.0e-6,
            2.0e-12,
            1.0,
        )
        .expect("bundled cantilever parameters are valid")
    }

    /// Gap-side damping at separation `a` [kg/s].
    pub fn gamma0(&self, a: f64) -> f64 {
        self.gamma0_coeff * a.powf(-self.gamma0_exponent)
    }

    /// d(gamma0)/da at separation `a` [kg/(s m)]; negative.
    pub fn dgamma0_da(&self, a: f64) -> f64 {
        -self.gamma0_exponent * self.gamma0_coeff * a.powf(-self.gamma0_exponent - 1.0)
    }
}

/// One calibration frequency sweep: drive frequency, complex response,
/// and the unwrapped response phase.
#[derive(Debug, Clone)]
pub struct FrequencySweepRecord {
    pub frequencies: Vec<f64>,
    pub response: Vec<num_complex::Complex64>,
    pub phase: Vec<f64>,
}

impl FrequencySweepRecord {
    /// Build from complex response samples, unwrapping the phase.
    pub fn from_response(
        frequencies: Vec<f64>,
        response: Vec<num_complex::Complex64>,
    ) -> Self {
        let mut phase = Vec::with_capacity(response.len());
        let mut offset = 0.0;
        let mut prev: Option<f64> = None;
        for r in &response {
            let raw = r.im.atan2(r.re);
            if let Some(p) = prev {
                let mut ph = raw + offset;
                while ph - p > std::f64::consts::PI {
                    offset -= 2.0 * std::f64::consts::PI;
                    ph = raw + offset;
                }
                while ph - p < -std::f64::consts::PI {
                    offset += 2.0 * std::f64::consts::PI;
                    ph = raw + offset;
                }
                phase.push(ph);
                prev = Some(ph);
            } else {
                phase.push(raw);
                prev = Some(raw);
            }
        }
        Self {
            frequencies,
            response,
            phase,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spring_constant_is_tied_to_mass_and_frequency() {
        let p = CantileverParams::bundled_defaults();
        assert!((p.spring_k - p.mass * p.omega0 * p.omega0).abs() < 1e-15);
        assert!((p.spring_k - 0.274).abs() / 0.274 < 0.01);
    }

    #[test]
    fn squeeze_film_scales_inversely_with_gap() {
        let p = CantileverParams::bundled_defaults();
        assert!((p.gamma0(100e-9) - 10.0 * p.gamma0(1e-6)).abs() / p.gamma0(100e-9) < 1e-12);
        assert!(p.dgamma0_da(100e-9) < 0.0);
    }

    #[test]
    fn phase_unwrap_is_continuous() {
        use num_complex::Complex64;
        // phase winding through several turns
        let freqs: Vec<f64> = (0..100).map(|i| 1.0 + i as f64).collect();
        let resp: Vec<Complex64> = freqs
            .iter()
            .map(|&f| Complex64::from_polar(1.0, -0.2 * f))
            .collect();
        let sweep = FrequencySweepRecord::from_response(freqs, resp);
        for w in sweep.phase.windows(2) {
            assert!((w[1] - w[0] + 0.2).abs() < 1e-9);
        }
    }
}

//! Dielectric response functions: Drude–Lorentz models, tabulated spectra,
//! ellipsometric conversion, Kramers–Kronig continuation, and model fitting.
//!
//! The model is
//!
//! ```text
//! eps(w) = 1 - wp^2/(w(w + i/tau)) + sum_j xi_j/(wj^2 - i w gj - w^2)
//! ```
//!
//! evaluated on the real axis, and its continuation to the imaginary axis
//!
//! ```text
//! eps(i x) = 1 + wp^2/(x(x + 1/tau)) + sum_j xi_j/(wj^2 + x gj + x^2).
//! ```
//!
//! Fitted oscillator strengths and dampings may be negative (the bundled
//! tables contain such rows); in that case the closed-form continuation can
//! develop spurious poles on the imaginary axis and the Lifshitz pipeline
//! uses the Kramers–Kronig continuation of the real-axis loss instead, see
//! [`kk::KkContinuation::of_model`].

pub mod ellipsometry;
pub mod fit;
pub mod kk;
pub mod materials;
pub mod spectrum;

pub use ellipsometry::{ellipsometry_to_epsilon, EllipsometricPoint};
pub use fit::{fit_model, FitOptions, FitReport};
pub use kk::{kk_transform, KkContinuation, LowTail};
pub use spectrum::{merge_with_literature, Provenance, SpectrumPoint, TabulatedSpectrum};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DielectricError {
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("evaluation at omega = {omega:.6e} s^-1 lies within {dist:.3e} of the resonance pole of oscillator {index}")]
    ResonancePole {
        index: usize,
        omega: f64,
        dist: f64,
    },
    #[error("model fit did not converge after {iterations} iterations (residual {residual:.3e})")]
    FitDidNotConverge { iterations: usize, residual: f64 },
    #[error("spectrum error: {0}")]
    Spectrum(String),
    #[error(
        "insufficient spectral coverage: {covered:.2} decades tabulated, {required:.0} required (missing {missing:.2})"
    )]
    InsufficientCoverage {
        covered: f64,
        required: f64,
        missing: f64,
    },
    #[error("xi = {xi:.3e} s^-1 outside the supported continuation range [{lo:.3e}, {hi:.3e}]")]
    XiOutOfRange { xi: f64, lo: f64, hi: f64 },
    #[error("spectral gap between measured and literature data exceeds one decade: {last_measured:.3e} -> {first_literature:.3e} s^-1")]
    SpectralGap {
        last_measured: f64,
        first_literature: f64,
    },
    #[error("singular ellipsometric input: rho = -1")]
    SingularEllipsometry,
    #[error("io: {0}")]
    Io(String),
}

/// One damped-oscillator term of the model.
///
/// `strength` (the table's xi_j, [s^-2]) and `gamma` [s^-1] may be negative;
/// the fitted tables contain such rows and no sign constraint is imposed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorTerm {
    /// Resonance angular frequency [s^-1]; strictly positive.
    pub omega: f64,
    /// Oscillator strength xi_j [s^-2].
    #[serde(rename = "xi")]
    pub strength: f64,
    /// Damping [s^-1].
    pub gamma: f64,
}

/// Free-carrier (Drude) term plus a set of damped oscillators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrudeLorentzModel {
    /// Plasma frequency [s^-1]. Zero disables the free-carrier term.
    pub omega_p: f64,
    /// Drude relaxation time [s].
    #[serde(rename = "tau_D")]
    pub tau_d: f64,
    pub oscillators: Vec<OscillatorTerm>,
}

/// Static (xi -> 0) limit of `eps(i xi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StaticLimit {
    /// Drude metal: eps(i xi) diverges as 1/xi.
    Conductor,
    /// Finite static permittivity.
    Dielectric(f64),
}

impl DrudeLorentzModel {
    /// Validated constructor. `omega_p = 0` is allowed and disables the
    /// Drude term (used for pure-oscillator and vacuum models).
    pub fn new(
        omega_p: f64,
        tau_d: f64,
        oscillators: Vec<OscillatorTerm>,
    ) -> Result<Self, DielectricError> {
        if !(omega_p >= 0.0) {
            return Err(DielectricError::InvalidParameter(format!(
                "omega_p must be >= 0, got {omega_p}"
            )));
        }
        if !(tau_d > 0.0) {
            return Err(DielectricError::InvalidParameter(format!(
                "tau_D must be > 0, got {tau_d}"
            )));
        }
        for (j, osc) in oscillators.iter().enumerate() {
            if !(osc.omega > 0.0) {
                return Err(DielectricError::InvalidParameter(format!(
                    "oscillator {j}: omega_j must be > 0, got {}",
                    osc.omega
                )));
            }
        }
        Ok(Self {
            omega_p,
            tau_d,
            oscillators,
        })
    }

    /// Vacuum model: eps = 1 everywhere.
    pub fn vacuum() -> Self {
        Self {
            omega_p: 0.0,
            tau_d: 1.0,
            oscillators: Vec::new(),
        }
    }

    /// Evaluate at a general complex frequency. Shared kernel of the
    /// real-axis and imaginary-axis paths.
    pub fn eval_complex(&self, omega: Complex64) -> Complex64 {
        let mut eps = Complex64::new(1.0, 0.0);
        if self.omega_p > 0.0 {
            eps -= self.omega_p * self.omega_p
                / (omega * (omega + Complex64::new(0.0, 1.0 / self.tau_d)));
        }
        for osc in &self.oscillators {
            let den = Complex64::new(osc.omega * osc.omega, 0.0)
                - Complex64::new(0.0, 1.0) * omega * osc.gamma
                - omega * omega;
            eps += osc.strength / den;
        }
        eps
    }

    /// Static limit of the imaginary-axis response.
    pub fn static_limit(&self) -> StaticLimit {
        if self.omega_p > 0.0 {
            StaticLimit::Conductor
        } else {
            let e0 = 1.0
                + self
                    .oscillators
                    .iter()
                    .map(|o| o.strength / (o.omega * o.omega))
                    .sum::<f64>();
            StaticLimit::Dielectric(e0)
        }
    }

    /// Imaginary part of eps on the real axis, used to tabulate loss
    /// spectra for the Kramers–Kronig transform.
    pub fn loss_real_axis(&self, omega: f64) -> f64 {
        let mut e2 = 0.0;
        if self.omega_p > 0.0 {
            let b = 1.0 / self.tau_d;
            e2 += self.omega_p * self.omega_p / (self.tau_d * omega * (omega * omega + b * b));
        }
        for osc in &self.oscillators {
            let d1 = osc.omega * osc.omega - omega * omega;
            let den = d1 * d1 + (omega * osc.gamma) * (omega * osc.gamma);
            e2 += osc.strength * omega * osc.gamma / den;
        }
        e2
    }
}

/// Complex dielectric function on the real frequency axis.
///
/// Fails with [`DielectricError::ResonancePole`] when `omega` sits within a
/// machine-scaled distance of an undamped resonance, rather than silently
/// returning an overflowed value.
pub fn eval_real_axis(
    model: &DrudeLorentzModel,
    omega: f64,
) -> Result<Complex64, DielectricError> {
    assert!(omega > 0.0, "eval_real_axis requires omega > 0");
    for (j, osc) in model.oscillators.iter().enumerate() {
        let den = Complex64::new(
            osc.omega * osc.omega - omega * omega,
            -omega * osc.gamma,
        );
        let scale = (osc.omega * osc.omega).max(omega * omega);
        if den.norm() < 1e-12 * scale {
            return Err(DielectricError::ResonancePole {
                index: j,
                omega,
                dist: den.norm(),
            });
        }
    }
    Ok(model.eval_complex(Complex64::new(omega, 0.0)))
}

/// Closed-form analytic continuation `eps(i xi)` of the model.
///
/// At `xi = 0` a Drude metal returns `f64::INFINITY` as the documented
/// divergence marker; consumers that need the static reflection limit use
/// [`DrudeLorentzModel::static_limit`] instead of doing arithmetic on it.
pub fn eval_imag_axis(model: &DrudeLorentzModel, xi: f64) -> f64 {
    assert!(xi >= 0.0, "eval_imag_axis requires xi >= 0");
    if xi == 0.0 {
        return match model.static_limit() {
            StaticLimit::Conductor => f64::INFINITY,
            StaticLimit::Dielectric(e0) => e0,
        };
    }
    let mut eps = 1.0;
    if model.omega_p > 0.0 {
        eps += model.omega_p * model.omega_p / (xi * (xi + 1.0 / model.tau_d));
    }
    for osc in &model.oscillators {
        eps += osc.strength / (osc.omega * osc.omega + xi * osc.gamma + xi * xi);
    }
    eps
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single_lorentz() -> DrudeLorentzModel {
        DrudeLorentzModel::new(
            0.0,
            1.0,
            vec![OscillatorTerm {
                omega: 1.0,
                strength: 1.0,
                gamma: 0.0,
            }],
        )
        .unwrap()
    }

    #[test]
    fn high_frequency_limit_is_unity() {
        let m = DrudeLorentzModel::new(1.0e16, 1e-14, vec![]).unwrap();
        let e = eval_real_axis(&m, 1e22).unwrap();
        assert_relative_eq!(e.re, 1.0, epsilon = 1e-6);
        assert!(e.im.abs() < 1e-6);
    }

    #[test]
    fn static_limit_of_single_lorentz_term() {
        // eps(0) = 1 + xi/omega^2 = 2; checked through eval_imag_axis at xi=0
        let m = single_lorentz();
        assert_eq!(eval_imag_axis(&m, 0.0), 2.0);
        assert_eq!(m.static_limit(), StaticLimit::Dielectric(2.0));
    }

    #[test]
    fn vacuum_is_unity_on_both_axes() {
        let m = DrudeLorentzModel::vacuum();
        for xi in [1e12, 1e14, 1e16] {
            assert_eq!(eval_imag_axis(&m, xi), 1.0);
        }
        assert_eq!(eval_real_axis(&m, 1e15).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn drude_marker_at_zero() {
        let m = DrudeLorentzModel::new(1e16, 1e-14, vec![]).unwrap();
        assert!(eval_imag_axis(&m, 0.0).is_infinite());
        assert_eq!(m.static_limit(), StaticLimit::Conductor);
    }

    #[test]
    fn resonance_pole_is_reported() {
        let m = single_lorentz();
        let err = eval_real_axis(&m, 1.0).unwrap_err();
        assert!(matches!(err, DielectricError::ResonancePole { index: 0, .. }));
    }

    #[test]
    fn imag_axis_equals_complex_substitution() {
        // eval_imag_axis must be the omega -> i xi substitution of the
        // complex kernel to machine precision
        let m = DrudeLorentzModel::new(
            3.0e15,
            2.0e-14,
            vec![
                OscillatorTerm {
                    omega: 5.0e15,
                    strength: 4.0e31,
                    gamma: 1.0e15,
                },
                OscillatorTerm {
                    omega: 2.0e16,
                    strength: -3.0e30,
                    gamma: -2.0e14,
                },
            ],
        )
        .unwrap();
        for &xi in &[1e13, 7.7e14, 3.1e15, 9.9e16] {
            let direct = eval_imag_axis(&m, xi);
            let subst = m.eval_complex(Complex64::new(0.0, xi));
            assert_relative_eq!(direct, subst.re, max_relative = 1e-14);
            assert!(subst.im.abs() <= 1e-12 * subst.re.abs());
        }
    }

    #[test]
    fn model_json_round_trip_uses_spec_field_names() {
        let m = single_lorentz();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"omega_p\""));
        assert!(s.contains("\"tau_D\""));
        assert!(s.contains("\"xi\""));
        let back: DrudeLorentzModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn negative_tau_rejected() {
        assert!(DrudeLorentzModel::new(1e16, -1.0, vec![]).is_err());
    }
}

//! Kramers–Kronig continuation of loss spectra to the imaginary axis:
//!
//! ```text
//! eps(i xi) = 1 + (2/pi) int_0^inf  w eps''(w) / (w^2 + xi^2) dw
//! ```
//!
//! The tabulated range is integrated segment-wise; outside it the loss is
//! extrapolated with a Drude term below (parameters from a concurrently
//! fitted model, or the 1/w asymptote matched at the first point) and an
//! `eps'' ~ w^-3` tail matched at the last point above. Both tails are
//! integrated in closed form, keeping the transform convergent.

use super::{DielectricError, DrudeLorentzModel, TabulatedSpectrum};
use crate::math::quad::gauss24;

/// Decades of tabulated coverage required by the transform.
pub const REQUIRED_DECADES: f64 = 6.0;

/// Low-frequency extrapolation of the loss below the tabulated range.
#[derive(Debug, Clone, Copy)]
pub enum LowTail {
    /// Drude loss with the given plasma frequency [s^-1] and relaxation
    /// time [s]; use the Drude term of a concurrently fitted model.
    Drude { omega_p: f64, tau: f64 },
    /// `eps'' = A/w` matched at the first tabulated point (the Drude
    /// low-frequency asymptote).
    Matched,
}

#[derive(Debug, Clone, Copy)]
enum LowTailResolved {
    Drude { omega_p: f64, tau: f64 },
    OverOmega { a: f64 },
}

/// Precomputed continuation of one loss spectrum, cheap to evaluate at many
/// imaginary frequencies.
#[derive(Debug, Clone)]
pub struct KkContinuation {
    omega: Vec<f64>,
    eps2: Vec<f64>,
    low: LowTailResolved,
    /// eps'' ~ c_high / w^3 above the last point.
    c_high: f64,
}

impl KkContinuation {
    /// Continuation of a tabulated spectrum.
    pub fn of_spectrum(
        spectrum: &TabulatedSpectrum,
        low_tail: LowTail,
    ) -> Result<Self, DielectricError> {
        let (lo, hi) = spectrum.omega_range();
        let covered = (hi / lo).log10();
        if covered < REQUIRED_DECADES - 1e-9 {
            return Err(DielectricError::InsufficientCoverage {
                covered,
                required: REQUIRED_DECADES,
                missing: REQUIRED_DECADES - covered,
            });
        }
        let omega: Vec<f64> = spectrum.points().iter().map(|p| p.omega).collect();
        let eps2: Vec<f64> = spectrum.points().iter().map(|p| p.eps_imag).collect();
        Ok(Self::from_samples(omega, eps2, low_tail))
    }

    /// Continuation of a Drude–Lorentz model through its real-axis loss.
    ///
    /// This is the route the Lifshitz pipeline uses for the bundled fitted
    /// tables: their negative-damping rows put poles of the closed-form
    /// continuation on the imaginary axis, while the transform of the
    /// real-axis loss stays smooth and physical.
    pub fn of_model(model: &DrudeLorentzModel) -> Self {
        const OMEGA_MIN: f64 = 1e11;
        const OMEGA_MAX: f64 = 1e19;
        const PER_DECADE: usize = 400;
        let n = ((OMEGA_MAX / OMEGA_MIN).log10() * PER_DECADE as f64) as usize;
        let ratio = (OMEGA_MAX / OMEGA_MIN).powf(1.0 / (n - 1) as f64);
        let omega: Vec<f64> = (0..n).map(|i| OMEGA_MIN * ratio.powi(i as i32)).collect();
        let eps2: Vec<f64> = omega.iter().map(|&w| model.loss_real_axis(w)).collect();
        let low = if model.omega_p > 0.0 {
            LowTail::Drude {
                omega_p: model.omega_p,
                tau: model.tau_d,
            }
        } else {
            LowTail::Matched
        };
        Self::from_samples(omega, eps2, low)
    }

    fn from_samples(omega: Vec<f64>, eps2: Vec<f64>, low_tail: LowTail) -> Self {
        let low = match low_tail {
            LowTail::Drude { omega_p, tau } => LowTailResolved::Drude { omega_p, tau },
            LowTail::Matched => LowTailResolved::OverOmega {
                a: eps2[0] * omega[0],
            },
        };
        let n = omega.len();
        let c_high = (eps2[n - 1] * omega[n - 1].powi(3)).max(0.0);
        Self {
            omega,
            eps2,
            low,
            c_high,
        }
    }

    pub fn omega_range(&self) -> (f64, f64) {
        (self.omega[0], *self.omega.last().unwrap())
    }

    /// Evaluate `eps(i xi)`; `xi` must lie within a decade of the tabulated
    /// range on either side.
    pub fn eval(&self, xi: f64) -> Result<f64, DielectricError> {
        let (lo, hi) = self.omega_range();
        if !(xi >= lo / 10.0 && xi <= hi * 10.0) {
            return Err(DielectricError::XiOutOfRange {
                xi,
                lo: lo / 10.0,
                hi: hi * 10.0,
            });
        }
        let xi2 = xi * xi;
        // tabulated range: per-segment Gauss rule on linearly interpolated loss
        let mut mid = 0.0;
        for i in 0..self.omega.len() - 1 {
            let (w0, w1) = (self.omega[i], self.omega[i + 1]);
            let (e0, e1) = (self.eps2[i], self.eps2[i + 1]);
            let slope = (e1 - e0) / (w1 - w0);
            mid += gauss24(
                |w| {
                    let e = e0 + slope * (w - w0);
                    w * e / (w * w + xi2)
                },
                w0,
                w1,
            );
        }
        let low = match self.low {
            LowTailResolved::Drude { omega_p, tau } => drude_tail_integral(omega_p, tau, lo, xi),
            LowTailResolved::OverOmega { a } => a * (lo / xi).atan() / xi,
        };
        let high = high_tail_integral(self.c_high, hi, xi);
        Ok(1.0 + 2.0 / std::f64::consts::PI * (mid + low + high))
    }
}

/// `int_0^W  w eps''_D(w)/(w^2+xi^2) dw` for Drude loss
/// `eps''_D = wp^2/(tau w (w^2 + 1/tau^2))`, in closed form.
fn drude_tail_integral(omega_p: f64, tau: f64, w_up: f64, xi: f64) -> f64 {
    if omega_p == 0.0 {
        return 0.0;
    }
    let b = 1.0 / tau;
    let pref = omega_p * omega_p / tau;
    if (xi - b).abs() > 1e-8 * b {
        pref / (xi * xi - b * b) * ((w_up / b).atan() / b - (w_up / xi).atan() / xi)
    } else {
        // xi == b limit: int dw/(w^2+b^2)^2
        pref * (w_up / (2.0 * b * b * (w_up * w_up + b * b)) + (w_up / b).atan() / (2.0 * b.powi(3)))
    }
}

/// `int_W^inf  w (c/w^3)/(w^2+xi^2) dw` in closed form, with a series branch
/// where the direct expression cancels.
fn high_tail_integral(c: f64, w_lo: f64, xi: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let u = xi / w_lo;
    let f = if u < 1e-3 {
        // (u - atan u)/u^3 = 1/3 - u^2/5 + u^4/7 - ...
        1.0 / 3.0 - u * u / 5.0 + u.powi(4) / 7.0
    } else {
        (u - u.atan()) / (u * u * u)
    };
    c / w_lo.powi(3) * f
}

/// One-shot Kramers–Kronig transform of a tabulated spectrum.
///
/// Preconditions from the interchange contract: the spectrum must cover at
/// least six decades and `xi` must lie within a decade of the tabulated
/// range. A spectrum with `eps'' = 0` everywhere returns exactly 1.
pub fn kk_transform(
    spectrum: &TabulatedSpectrum,
    xi: f64,
    low_tail: LowTail,
) -> Result<f64, DielectricError> {
    KkContinuation::of_spectrum(spectrum, low_tail)?.eval(xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dielectric::spectrum::{Provenance, SpectrumPoint};
    use crate::dielectric::{eval_imag_axis, OscillatorTerm};

    fn lossless_spectrum() -> TabulatedSpectrum {
        let pts = (0..200)
            .map(|i| SpectrumPoint {
                omega: 1e11 * 10f64.powf(i as f64 * 7.0 / 199.0),
                eps_real: 1.0,
                eps_imag: 0.0,
                provenance: Provenance::Measured,
            })
            .collect();
        TabulatedSpectrum::new(pts).unwrap()
    }

    #[test]
    fn zero_loss_gives_unity() {
        let s = lossless_spectrum();
        let e = kk_transform(&s, 1e14, LowTail::Matched).unwrap();
        assert_eq!(e, 1.0);
    }

    #[test]
    fn coverage_under_six_decades_rejected() {
        let pts = (0..40)
            .map(|i| SpectrumPoint {
                omega: 1e13 * 10f64.powf(i as f64 * 3.0 / 39.0),
                eps_real: 1.0,
                eps_imag: 0.1,
                provenance: Provenance::Measured,
            })
            .collect();
        let s = TabulatedSpectrum::new(pts).unwrap();
        let err = kk_transform(&s, 1e14, LowTail::Matched).unwrap_err();
        assert!(matches!(err, DielectricError::InsufficientCoverage { .. }));
    }

    #[test]
    fn xi_outside_range_rejected() {
        let s = lossless_spectrum();
        assert!(matches!(
            kk_transform(&s, 1e20, LowTail::Matched),
            Err(DielectricError::XiOutOfRange { .. })
        ));
    }

    #[test]
    fn single_lorentz_matches_analytic_continuation() {
        // densely tabulated passive oscillator: transform must agree with
        // the closed-form continuation to 0.5% relative
        let model = DrudeLorentzModel::new(
            0.0,
            1.0,
            vec![OscillatorTerm {
                omega: 3.0e15,
                strength: 5.0e31,
                gamma: 4.0e14,
            }],
        )
        .unwrap();
        let spec = TabulatedSpectrum::from_model(&model, 1e11, 1e19, 1200);
        let kk = KkContinuation::of_spectrum(&spec, LowTail::Matched).unwrap();
        for &xi in &[1e13, 1e14, 1e15, 5e15, 2e16, 1e17] {
            let e_kk = kk.eval(xi).unwrap();
            let e_an = eval_imag_axis(&model, xi);
            assert!(
                (e_kk - e_an).abs() / e_an < 5e-3,
                "xi={xi:.2e}: kk={e_kk} analytic={e_an}"
            );
        }
    }

    #[test]
    fn drude_model_continuation_matches_analytic() {
        let model = DrudeLorentzModel::new(1.2e16, 1.5e-14, vec![]).unwrap();
        let kk = KkContinuation::of_model(&model);
        for &xi in &[2.4e14, 1e15, 1e16, 1e17] {
            let e_kk = kk.eval(xi).unwrap();
            let e_an = eval_imag_axis(&model, xi);
            assert!(
                (e_kk - e_an).abs() / e_an < 5e-3,
                "xi={xi:.2e}: kk={e_kk} analytic={e_an}"
            );
        }
    }

    #[test]
    fn result_exceeds_unity_with_any_absorption() {
        let model = DrudeLorentzModel::new(
            0.0,
            1.0,
            vec![OscillatorTerm {
                omega: 1.0e15,
                strength: 1.0e29,
                gamma: 1.0e14,
            }],
        )
        .unwrap();
        let spec = TabulatedSpectrum::from_model(&model, 1e11, 1e18, 600);
        let kk = KkContinuation::of_spectrum(&spec, LowTail::Matched).unwrap();
        assert!(kk.eval(1e16).unwrap() > 1.0);
    }
}

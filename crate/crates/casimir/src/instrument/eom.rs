//! Equation of motion of the damped cantilever with a moving base and a
//! moving plate, its small-signal transfer functions, and the closed-form
//! resonance frequencies and phases used by the phase-locked loop.
//!
//! In Fourier space the relative motion `Y = X - X1` obeys
//!
//! ```text
//!      F - (df/da)(X0 - X1) - i w (g0 (X1 - X0) + 3 g0' X0 X1 + i w m X1)
//! Y = -------------------------------------------------------------------
//!      k - df/da + i w (g0 + g1 + 2 g0' (X0 - X1)) - m w^2
//! ```
//!
//! with `g0 = gamma0(a)` and `g0' = d(gamma0)/da`. Transfer functions are
//! the exact linear coefficients `dY/dB` at vanishing drive amplitude, the
//! other sources held at their configured values.
//!
//! The PLL locks to the pi phase jump of the resonator pole, so the
//! resonance condition solved here is the vanishing in-phase part of the
//! denominator, whose root is `sqrt((k - df/da)/m)` for every source. (The
//! numerator feedthrough of the base- and plate-driven responses would
//! shift the raw `Re Y = 0` crossing at second order in the damping; the
//! phase jump the loop tracks is set by the pole.) The phase at resonance
//! is the principal arctangent of Im/Re of the transfer function, which
//! reproduces the closed forms: `-pi/2` for force drive, distance-dependent
//! arctangents for the motion drives.

use super::{CantileverParams, InstrumentError};
use crate::math::brent_root;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Which excitation drives the cantilever.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriveSource {
    /// Direct force F (electrostatic drive).
    Force,
    /// Plate motion X0.
    PlateMotion,
    /// Base motion X1.
    BaseMotion,
}

/// Configured drive amplitudes (F [N], X0 [m], X1 [m]).
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct DriveAmplitudes {
    pub force: f64,
    pub x0: f64,
    pub x1: f64,
}

/// Separation-dependent operating point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Separation [m].
    pub a: f64,
    /// Static force gradient df/da [N/m].
    pub dfda: f64,
}

struct Coeffs {
    k: f64,
    m: f64,
    dfda: f64,
    g0: f64,
    dg0: f64,
    g1: f64,
}

impl Coeffs {
    fn new(params: &CantileverParams, op: &OperatingPoint) -> Self {
        Self {
            k: params.spring_k,
            m: params.mass,
            dfda: op.dfda,
            g0: params.gamma0(op.a),
            dg0: params.dgamma0_da(op.a),
            g1: params.gamma1,
        }
    }

    fn numerator(&self, omega: f64, amps: &DriveAmplitudes) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        Complex64::new(amps.force - self.dfda * (amps.x0 - amps.x1), 0.0)
            - i * omega
                * (Complex64::new(
                    self.g0 * (amps.x1 - amps.x0) + 3.0 * self.dg0 * amps.x0 * amps.x1,
                    0.0,
                ) + i * omega * self.m * amps.x1)
    }

    fn denominator(&self, omega: f64, amps: &DriveAmplitudes) -> Complex64 {
        Complex64::new(
            self.k - self.dfda - self.m * omega * omega,
            omega * (self.g0 + self.g1 + 2.0 * self.dg0 * (amps.x0 - amps.x1)),
        )
    }
}

/// Full response `Y(omega)` at the configured amplitudes.
pub fn eom_response(
    omega: f64,
    params: &CantileverParams,
    amps: &DriveAmplitudes,
    op: &OperatingPoint,
) -> Complex64 {
    let c = Coeffs::new(params, op);
    c.numerator(omega, amps) / c.denominator(omega, amps)
}

/// Exact small-signal coefficient `dY/dB` at `B -> 0` for the chosen
/// source; the other amplitudes stay at their configured values.
pub fn transfer_function(
    source: DriveSource,
    omega: f64,
    params: &CantileverParams,
    amps: &DriveAmplitudes,
    op: &OperatingPoint,
) -> Complex64 {
    let c = Coeffs::new(params, op);
    let mut at_zero = *amps;
    let i = Complex64::new(0.0, 1.0);
    let (dn, dd) = match source {
        DriveSource::Force => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
        DriveSource::PlateMotion => {
            at_zero.x0 = 0.0;
            (
                Complex64::new(-c.dfda, 0.0) + i * omega * (c.g0 - 3.0 * c.dg0 * at_zero.x1),
                2.0 * i * omega * c.dg0,
            )
        }
        DriveSource::BaseMotion => {
            at_zero.x1 = 0.0;
            (
                Complex64::new(c.dfda + c.m * omega * omega, 0.0)
                    - i * omega * (c.g0 + 3.0 * c.dg0 * at_zero.x0),
                -2.0 * i * omega * c.dg0,
            )
        }
    };
    let n = c.numerator(omega, &at_zero);
    let d = c.denominator(omega, &at_zero);
    dn / d - n * dd / (d * d)
}

/// Resonance frequency and phase at resonance for one drive source.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResonancePhase {
    /// Closed form `sqrt((k - df/da)/m)` [rad/s].
    pub omega_res: f64,
    /// The same frequency recovered by numeric root finding.
    pub omega_res_numeric: f64,
    /// Phase of the transfer function at resonance, principal branch [rad].
    pub phi: f64,
}

/// Solve the resonance condition numerically and evaluate the phase.
///
/// Requires `k > df/da`; the in-phase pole condition otherwise never
/// crosses zero and the oscillator is unstable.
pub fn resonance_and_phase(
    source: DriveSource,
    params: &CantileverParams,
    amps: &DriveAmplitudes,
    op: &OperatingPoint,
) -> Result<ResonancePhase, InstrumentError> {
    let c = Coeffs::new(params, op);
    if c.k <= c.dfda {
        return Err(InstrumentError::PullIn {
            dfda: c.dfda,
            k: c.k,
        });
    }
    let omega_res = ((c.k - c.dfda) / c.m).sqrt();

    // numeric root of the in-phase pole condition on a generous bracket
    let f = |w: f64| c.denominator(w, amps).re;
    let (lo, hi) = (0.05 * omega_res, 4.0 * omega_res);
    if f(lo) * f(hi) > 0.0 {
        return Err(InstrumentError::Bracket);
    }
    let omega_res_numeric =
        brent_root(f, lo, hi, 1e-14).ok_or(InstrumentError::Bracket)?;

    let y = transfer_function(source, omega_res, params, amps, op);
    // principal arctangent of Im/Re; the force-driven response is purely
    // imaginary at resonance and lands exactly on -pi/2
    let phi = if y.re == 0.0 || y.re.abs() < 1e-14 * y.im.abs() {
        std::f64::consts::FRAC_PI_2.copysign(y.im)
    } else {
        (y.im / y.re).atan()
    };
    Ok(ResonancePhase {
        omega_res,
        omega_res_numeric,
        phi,
    })
}

/// Closed-form phases at resonance, derived from the transfer functions
/// evaluated at `omega_res = sqrt((k-df/da)/m)`. The force-driven phase is
/// exactly `-pi/2`; the motion-driven phases keep an explicit distance
/// dependence through `gamma0` and its gradient.
pub fn closed_form_phase(
    source: DriveSource,
    params: &CantileverParams,
    amps: &DriveAmplitudes,
    op: &OperatingPoint,
) -> f64 {
    let c = Coeffs::new(params, op);
    let w0 = ((c.k - c.dfda) / c.m).sqrt();
    match source {
        DriveSource::Force => -std::f64::consts::FRAC_PI_2,
        DriveSource::PlateMotion => {
            let gam = c.g0 + c.g1 - 2.0 * c.dg0 * amps.x1;
            let num = c.dfda * gam + 2.0 * c.dg0 * (amps.force + c.k * amps.x1);
            let den = w0 * (c.g0 * gam - 3.0 * c.dg0 * amps.x1 * gam + 2.0 * c.dg0 * c.g0 * amps.x1);
            (num / den).atan()
        }
        DriveSource::BaseMotion => {
            let gam = c.g0 + c.g1 + 2.0 * c.dg0 * amps.x0;
            let num = c.k * gam + 2.0 * c.dg0 * (amps.force - c.dfda * amps.x0);
            let den = w0 * (c.g0 * gam + 3.0 * c.dg0 * amps.x0 * gam - 2.0 * c.dg0 * c.g0 * amps.x0);
            (num / den).atan()
        }
    }
}

//! Electrostatic sphere-plate interaction: the calibration response
//! function and the known excitation gradient subtracted in the analysis.

use super::CantileverParams;
use crate::constants::EPS_0;
use num_complex::Complex64;

/// Known electrostatic force gradient of the sphere-plate capacitor at
/// bias `v` [N/m]: `pi eps0 R v^2 / a^2` (PFA, a << R). Positive, i.e.
/// attractive, like the Casimir convention.
pub fn electrostatic_gradient(a: f64, v: f64, radius: f64) -> f64 {
    std::f64::consts::PI * EPS_0 * radius * v * v / (a * a)
}

/// Calibration response `F_ES T_Fx` of the electrostatically driven
/// cantilever:
///
/// ```text
/// 4 pi R eps0 (Vex^2 + Vac^2)
/// ---------------------------------------------------------
/// a^2 ( m w0^2 + 2 pi eps0 R (Vex^2+Vac^2)/a^2 + i g w - m w^2 )
/// ```
///
/// The electrostatic spring term and the inertial term carry the mass
/// factor so the bracket stays a stiffness [N/m]; its argument plus the
/// detection offset is what the phase calibration fits.
pub fn electrostatic_response(
    a: f64,
    v_ex: f64,
    v_ac: f64,
    omega: f64,
    params: &CantileverParams,
    radius: f64,
) -> Complex64 {
    let gamma = params.gamma0(a) + params.gamma1;
    electrostatic_response_raw(
        a,
        v_ex * v_ex + v_ac * v_ac,
        omega,
        params.mass,
        params.omega0,
        gamma,
        radius,
    )
}

/// Same response with the oscillator parameters spelled out; the
/// calibration fits vary `omega0` and `gamma` directly.
pub fn electrostatic_response_raw(
    a: f64,
    v_squared: f64,
    omega: f64,
    mass: f64,
    omega0: f64,
    gamma: f64,
    radius: f64,
) -> Complex64 {
    assert!(a > 0.0, "separation must be positive");
    let k_es = 2.0 * std::f64::consts::PI * EPS_0 * radius * v_squared / (a * a);
    let denom = Complex64::new(
        mass * omega0 * omega0 + k_es - mass * omega * omega,
        gamma * omega,
    );
    let num = 4.0 * std::f64::consts::PI * radius * EPS_0 * v_squared;
    num / (a * a * denom)
}

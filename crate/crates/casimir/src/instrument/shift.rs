//! Frequency-shift to force-gradient conversion and its inverse.

use super::InstrumentError;

/// `dF/da = m [omega0^2 - (omega0 + delta_omega)^2]`; a negative shift
/// (attraction) maps to a positive gradient.
pub fn gradient_from_shift(mass: f64, omega0: f64, delta_omega: f64) -> f64 {
    debug_assert!(delta_omega.abs() < omega0);
    mass * (omega0 * omega0 - (omega0 + delta_omega) * (omega0 + delta_omega))
}

/// Inverse of [`gradient_from_shift`]: the shift the PLL reports for a
/// given gradient. Fails with pull-in once the gradient reaches the spring
/// constant `m omega0^2`.
pub fn shift_from_gradient(mass: f64, omega0: f64, dfda: f64) -> Result<f64, InstrumentError> {
    let k = mass * omega0 * omega0;
    if dfda >= k {
        return Err(InstrumentError::PullIn { dfda, k });
    }
    Ok((omega0 * omega0 - dfda / mass).sqrt() - omega0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const M: f64 = 1.871e-8;

    fn w0() -> f64 {
        2.0 * std::f64::consts::PI * 609.07
    }

    #[test]
    fn zero_shift_zero_gradient() {
        assert_eq!(gradient_from_shift(M, w0(), 0.0), 0.0);
        assert_eq!(shift_from_gradient(M, w0(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn tenth_of_a_hertz_down() {
        // frozen by direct arithmetic on the measured cantilever numbers
        let g = gradient_from_shift(M, w0(), -2.0 * std::f64::consts::PI * 0.1);
        assert_relative_eq!(g, 9.0e-5, max_relative = 2e-3);
        assert!(g > 0.0);
    }

    #[test]
    fn round_trip_is_identity() {
        for g in [1e-6, 1e-4, 2.7e-3] {
            let dw = shift_from_gradient(M, w0(), g).unwrap();
            let back = gradient_from_shift(M, w0(), dw);
            assert_relative_eq!(back, g, max_relative = 1e-12);
        }
    }

    #[test]
    fn small_gradient_limit() {
        // delta_omega ~ -dfda/(2 m omega0) to first order
        let dfda = 1e-4;
        let dw = shift_from_gradient(M, w0(), dfda).unwrap();
        let approx = -dfda / (2.0 * M * w0());
        assert!((dw - approx).abs() / dw.abs() < 1e-3);
    }

    #[test]
    fn pull_in_at_spring_constant() {
        let k = M * w0() * w0();
        assert!(matches!(
            shift_from_gradient(M, w0(), k),
            Err(InstrumentError::PullIn { .. })
        ));
    }
}

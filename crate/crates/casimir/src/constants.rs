//! Physical constants (CODATA 2018) in SI units.

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant [J/K].
pub const K_B: f64 = 1.380_649e-23;

/// Speed of light in vacuum [m/s].
pub const C: f64 = 299_792_458.0;

/// Vacuum permittivity [F/m].
pub const EPS_0: f64 = 8.854_187_8128e-12;

/// First Matsubara angular frequency 2π k_B T / ħ at temperature `t` [s⁻¹].
pub fn matsubara_spacing(t: f64) -> f64 {
    2.0 * std::f64::consts::PI * K_B * t / HBAR
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matsubara_spacing_at_296k() {
        // 2.435e14 s^-1 at ambient temperature
        let xi1 = matsubara_spacing(296.0);
        assert!((xi1 - 2.4349e14).abs() / 2.4349e14 < 1e-4);
    }
}

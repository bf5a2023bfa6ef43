//! Conversion of ellipsometric angles to an effective dielectric function.
//!
//! A single effective layer is assumed: the measured ratio
//! `rho = r_p/r_s = tan(psi) exp(i Delta)` converts as
//! `eps = sin^2(phi) [1 + tan^2(phi) (1-rho)^2/(1+rho)^2]`.

use super::DielectricError;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Read;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipsometricPoint {
    /// Vacuum wavelength [m].
    pub wavelength: f64,
    /// Amplitude angle psi [rad], in (0, pi/2).
    pub psi: f64,
    /// Phase angle Delta [rad].
    pub delta: f64,
    /// Angle of incidence phi [rad], in (0, pi/2).
    pub incidence_angle: f64,
}

impl EllipsometricPoint {
    pub fn validate(&self) -> Result<(), DielectricError> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(self.psi > 0.0 && self.psi < half_pi) {
            return Err(DielectricError::InvalidParameter(format!(
                "psi must lie in (0, pi/2), got {}",
                self.psi
            )));
        }
        if !(self.incidence_angle > 0.0 && self.incidence_angle < half_pi) {
            return Err(DielectricError::InvalidParameter(format!(
                "phi must lie in (0, pi/2), got {}",
                self.incidence_angle
            )));
        }
        Ok(())
    }
}

/// Effective single-layer dielectric value for one ellipsometric point.
pub fn ellipsometry_to_epsilon(
    point: &EllipsometricPoint,
) -> Result<Complex64, DielectricError> {
    point.validate()?;
    let rho = point.psi.tan() * Complex64::new(0.0, point.delta).exp();
    let denom = Complex64::new(1.0, 0.0) + rho;
    if denom.norm() < 1e-14 {
        return Err(DielectricError::SingularEllipsometry);
    }
    let ratio = (Complex64::new(1.0, 0.0) - rho) / denom;
    let sin2 = point.incidence_angle.sin().powi(2);
    let tan2 = point.incidence_angle.tan().powi(2);
    Ok(sin2 * (Complex64::new(1.0, 0.0) + tan2 * ratio * ratio))
}

/// Read the CSV format `wavelength_m, psi_rad, delta_rad, phi_rad`.
pub fn read_ellipsometry_csv<R: Read>(reader: R) -> Result<Vec<EllipsometricPoint>, DielectricError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| DielectricError::Io(format!("line {}: {e}", i + 2)))?;
        let f = |k: usize| -> Result<f64, DielectricError> {
            rec.get(k)
                .ok_or_else(|| DielectricError::Io(format!("line {}: missing column {k}", i + 2)))?
                .parse()
                .map_err(|e| DielectricError::Io(format!("line {}: {e}", i + 2)))
        };
        out.push(EllipsometricPoint {
            wavelength: f(0)?,
            psi: f(1)?,
            delta: f(2)?,
            incidence_angle: f(3)?,
        });
    }
    Ok(out)
}

pub fn read_ellipsometry_path(path: &Path) -> Result<Vec<EllipsometricPoint>, DielectricError> {
    let f = std::fs::File::open(path)
        .map_err(|e| DielectricError::Io(format!("{}: {e}", path.display())))?;
    read_ellipsometry_csv(f)
}

//! Spherical-cap fitting of sphere topography scans and peak exclusion.

use super::{GridMap, HeightMap, MapRole, SurfaceError};
use crate::math::stats::median;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct SphereFit {
    /// Fitted radius [m].
    pub radius: f64,
    /// Center of the fitted sphere (x, y, z) [m] in map coordinates.
    pub center: (f64, f64, f64),
    /// Map minus the fitted cap; input for roughness sampling.
    pub residual: HeightMap,
    pub rms_residual: f64,
}

/// Least-squares sphere through the scan points.
///
/// Uses the algebraic form `x^2+y^2+z^2 = 2 x0 x + 2 y0 y + 2 zc z + d`,
/// which is linear in the parameters and exact for a noise-free cap. The
/// lateral extent must be small against the radius. A cap whose sag stays
/// within the measurement scatter cannot be told from a plane and is
/// reported as degenerate (the radius estimate diverges).
pub fn fit_sphere(map: &HeightMap) -> Result<SphereFit, SurfaceError> {
    if map.role != MapRole::Sphere {
        return Err(SurfaceError::SphereFitFailed(
            "map role must be sphere".into(),
        ));
    }
    let g = &map.grid;
    let n = g.nx() * g.ny();

    // prescreen with a paraboloid fit: a cap whose curvature signal does
    // not rise above the height scatter has no recoverable radius, and the
    // algebraic sphere system below is singular for it
    {
        let mut ap = DMatrix::zeros(n, 4);
        let mut bp = DVector::zeros(n);
        for iy in 0..g.ny() {
            for ix in 0..g.nx() {
                let row = iy * g.nx() + ix;
                let x = ix as f64 * g.pitch();
                let y = iy as f64 * g.pitch();
                ap[(row, 0)] = 1.0;
                ap[(row, 1)] = x;
                ap[(row, 2)] = y;
                ap[(row, 3)] = x * x + y * y;
                bp[row] = g.at(ix, iy);
            }
        }
        let sol = (ap.transpose() * &ap)
            .lu()
            .solve(&(ap.transpose() * &bp))
            .ok_or(SurfaceError::DegenerateSphereFit)?;
        let (sx, sy) = g.side_length();
        let sag_pred = sol[3].abs() * 0.25 * (sx * sx + sy * sy);
        let pp = g.stats().peak_peak;
        if sag_pred < 1e-12 || sag_pred < 1e-3 * pp {
            return Err(SurfaceError::DegenerateSphereFit);
        }
    }

    let mut a = DMatrix::zeros(n, 4);
    let mut b = DVector::zeros(n);
    for iy in 0..g.ny() {
        for ix in 0..g.nx() {
            let row = iy * g.nx() + ix;
            let x = ix as f64 * g.pitch();
            let y = iy as f64 * g.pitch();
            let z = g.at(ix, iy);
            a[(row, 0)] = 2.0 * x;
            a[(row, 1)] = 2.0 * y;
            a[(row, 2)] = 2.0 * z;
            a[(row, 3)] = 1.0;
            b[row] = x * x + y * y + z * z;
        }
    }
    let ata = a.transpose() * &a;
    let atb = a.transpose() * &b;
    let sol = ata
        .lu()
        .solve(&atb)
        .ok_or(SurfaceError::DegenerateSphereFit)?;
    let (x0, y0, zc, d) = (sol[0], sol[1], sol[2], sol[3]);
    let r2 = d + x0 * x0 + y0 * y0 + zc * zc;
    if !(r2 > 0.0) {
        return Err(SurfaceError::DegenerateSphereFit);
    }
    let radius = r2.sqrt();

    // predicted sag across the scan; if it is lost in the height scatter
    // the data cannot constrain a radius
    let (sx, sy) = g.side_length();
    let half_diag2 = 0.25 * (sx * sx + sy * sy);
    let sag = half_diag2 / (2.0 * radius);
    let stats = g.stats();
    if sag < 1e-12 || sag < 1e-3 * stats.peak_peak {
        return Err(SurfaceError::DegenerateSphereFit);
    }

    // residual: measured z minus the upper cap surface through (x0,y0,zc)
    let mut residual = g.clone();
    let mut ss = 0.0;
    for iy in 0..g.ny() {
        for ix in 0..g.nx() {
            let x = ix as f64 * g.pitch();
            let y = iy as f64 * g.pitch();
            let rho2 = (x - x0).powi(2) + (y - y0).powi(2);
            let cap = zc + (r2 - rho2).max(0.0).sqrt();
            let res = g.at(ix, iy) - cap;
            residual.set_value(ix, iy, res);
            ss += res * res;
        }
    }
    let rms_residual = (ss / n as f64).sqrt();
    Ok(SphereFit {
        radius,
        center: (x0, y0, zc),
        residual: HeightMap::new(residual, MapRole::Sphere),
        rms_residual,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub masked_fraction: f64,
    /// Set when more than 20% of the pixels were excluded.
    pub data_quality_warning: bool,
    pub cutoff: f64,
}

/// Mask pixels standing more than `cutoff` above the median plane and
/// replace them by the median so interpolation across them stays bounded.
pub fn preprocess_peaks(map: &HeightMap, cutoff: f64) -> (HeightMap, PreprocessReport) {
    assert!(cutoff > 0.0, "cutoff must be positive");
    let g = &map.grid;
    let med = median(g.data());
    let mask: Vec<bool> = g.data().iter().map(|&v| v - med > cutoff).collect();
    let mut out = g.clone();
    for (i, &m) in mask.iter().enumerate() {
        if m {
            let iy = i / g.nx();
            let ix = i % g.nx();
            out.set_value(ix, iy, med);
        }
    }
    out.set_mask(mask);
    let masked_fraction = out.masked_fraction();
    (
        HeightMap::new(out, map.role),
        PreprocessReport {
            masked_fraction,
            data_quality_warning: masked_fraction > 0.20,
            cutoff,
        },
    )
}

/// Default peak-exclusion cutoff [m].
pub const DEFAULT_PEAK_CUTOFF: f64 = 30e-9;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::synth::{synthetic_map, SyntheticMapConfig};
    use crate::surfaces::{MapUnit, SpikeConfig};

    fn cap_map(radius: f64, noise_rms: f64, seed: u64) -> HeightMap {
        // 25 um scan of a sphere cap, 128x128
        let n = 128;
        let pitch = 25e-6 / n as f64;
        let cx = 12.5e-6;
        let cy = 12.5e-6;
        let mut data = Vec::with_capacity(n * n);
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for iy in 0..n {
            for ix in 0..n {
                let x = ix as f64 * pitch;
                let y = iy as f64 * pitch;
                let rho2 = (x - cx).powi(2) + (y - cy).powi(2);
                let z = (radius * radius - rho2).sqrt() - radius;
                let noise = if noise_rms > 0.0 {
                    noise_rms * crate::math::randn(&mut rng)
                } else {
                    0.0
                };
                data.push(z + noise);
            }
        }
        HeightMap::new(
            GridMap::new(n, n, pitch, data, MapUnit::Meters).unwrap(),
            MapRole::Sphere,
        )
    }

    #[test]
    fn exact_cap_recovers_radius() {
        let truth = 77.9e-6;
        let fit = fit_sphere(&cap_map(truth, 0.0, 0)).unwrap();
        assert!(
            (fit.radius - truth).abs() / truth < 1e-4,
            "fitted {} vs {}",
            fit.radius,
            truth
        );
        assert!(fit.rms_residual < 1e-12);
    }

    #[test]
    fn noisy_cap_stays_within_a_percent() {
        // 14.5 nm rms scatter, the sphere-scan level
        let truth = 77.9e-6;
        let fit = fit_sphere(&cap_map(truth, 14.5e-9, 3)).unwrap();
        assert!(
            (fit.radius - truth).abs() / truth < 0.01,
            "fitted {} vs {}",
            fit.radius,
            truth
        );
        let stats = fit.residual.grid.stats();
        assert!((stats.rms - 14.5e-9).abs() / 14.5e-9 < 0.1);
    }

    #[test]
    fn plane_is_degenerate() {
        let n = 64;
        let g = GridMap::new(n, n, 0.1e-6, vec![5e-9; n * n], MapUnit::Meters).unwrap();
        let m = HeightMap::new(g, MapRole::Sphere);
        assert!(matches!(
            fit_sphere(&m),
            Err(SurfaceError::DegenerateSphereFit)
        ));
    }

    #[test]
    fn peaks_below_cutoff_pass_through() {
        let cfg = SyntheticMapConfig {
            nx: 64,
            ny: 64,
            pitch: 0.1e-6,
            rms: 3e-9,
            correlation_length: 0.3e-6,
            spikes: None,
            seed: 5,
        };
        let m = HeightMap::new(synthetic_map(&cfg, MapUnit::Meters).unwrap(), MapRole::Plate);
        let (out, rep) = preprocess_peaks(&m, DEFAULT_PEAK_CUTOFF);
        assert_eq!(rep.masked_fraction, 0.0);
        assert_eq!(out.grid.data(), m.grid.data());
    }

    #[test]
    fn single_spike_is_masked() {
        let n = 32;
        let mut data = vec![0.0; n * n];
        data[5 * n + 7] = 50e-9;
        let g = GridMap::new(n, n, 0.1e-6, data, MapUnit::Meters).unwrap();
        let (out, rep) = preprocess_peaks(&HeightMap::new(g, MapRole::Plate), 30e-9);
        let mask = out.grid.mask().unwrap();
        assert!(mask[5 * n + 7]);
        assert_eq!(mask.iter().filter(|&&b| b).count(), 1);
        assert!(!rep.data_quality_warning);
    }

    #[test]
    fn planted_spike_fraction_recovered() {
        let cfg = SyntheticMapConfig {
            nx: 128,
            ny: 128,
            pitch: 0.1e-6,
            rms: 2e-9,
            correlation_length: 0.2e-6,
            spikes: Some(SpikeConfig {
                count: 12,
                height_min: 40e-9,
                height_max: 100e-9,
                radius: 0.15e-6,
            }),
            seed: 11,
        };
        let m = HeightMap::new(synthetic_map(&cfg, MapUnit::Meters).unwrap(), MapRole::Plate);
        let (_, rep) = preprocess_peaks(&m, 30e-9);
        // each planted spike masks roughly its core pixels; the fraction
        // is small but clearly nonzero
        assert!(rep.masked_fraction > 0.0005, "{}", rep.masked_fraction);
        assert!(rep.masked_fraction < 0.05, "{}", rep.masked_fraction);
    }
}

//! Electrostatic patch-potential correction via a PFA local-capacitor
//! model over mapped surface potentials.
//!
//! For each random placement of the tiled plate potential map the
//! interaction energy
//!
//! ```text
//! U(a) = sum_ij w_ij eps0 (V_s - V_p - V0)^2 / (2 h_ij)
//! ```
//!
//! is accumulated over the interaction zone, with `V0` chosen per
//! separation to minimize the global electrostatic force (weights 1/h^2),
//! mirroring the compensation feedback. The additive force gradient is the
//! numerical second derivative of the energy curve; runs whose energy
//! curve shows steps or outliers (median-absolute-deviation rule on the
//! log-log second differences) are rejected.

use super::{CorrectionResult, PotentialMap, SurfaceError};
use crate::constants::EPS_0;
use crate::math::spline::CubicSpline;
use crate::math::stats::{mad, median};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchOptions {
    pub seed: u64,
    /// Reject a run when a log-log second difference of its energy curve
    /// deviates from the median by more than this many MADs.
    pub outlier_mad_factor: f64,
    pub max_attempt_factor: usize,
    pub n_radial: usize,
    pub n_azimuthal: usize,
    /// Radial extent of the quadrature in units of sqrt(2 a R).
    pub radial_extent_factor: f64,
    /// Fix the compensation bias instead of minimizing the global force.
    pub v0_override: Option<f64>,
}

impl Default for PatchOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            outlier_mad_factor: 5.0,
            max_attempt_factor: 20,
            n_radial: 48,
            n_azimuthal: 24,
            radial_extent_factor: 3.0,
            v0_override: None,
        }
    }
}

/// Patch correction in both forms: the additive gradient [N/m] and the
/// multiplicative factor `eta_patch = 1 + gradient/flat` applied to the
/// smooth Casimir gradient.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchCorrection {
    pub gradient: CorrectionResult,
    pub eta: CorrectionResult,
}

struct EnergyCurve {
    a: Vec<f64>,
    u: Vec<f64>,
}

/// Energy curve over the dense separation grid for one placement.
///
/// The quadrature domain is sized once from the largest separation and
/// held fixed across the grid: a domain moving with `a` would make the
/// truncated 1/h energy nearly scale-invariant and destroy the
/// a-dependence that the numerical differentiation needs.
fn energy_curve(
    a_dense: &[f64],
    sphere_pot: &PotentialMap,
    plate_pot: &PotentialMap,
    radius: f64,
    offset: (f64, f64),
    opts: &PatchOptions,
) -> EnergyCurve {
    let (sx, sy) = sphere_pot.grid.side_length();
    let (scx, scy) = (0.5 * sx, 0.5 * sy);
    let a_max = a_dense.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let r_max = opts.radial_extent_factor * (2.0 * a_max * radius).sqrt();
    let dr = r_max / opts.n_radial as f64;
    let dphi = 2.0 * std::f64::consts::PI / opts.n_azimuthal as f64;
    // geometry and potentials are independent of the separation
    let mut nodes = Vec::with_capacity(opts.n_radial * opts.n_azimuthal);
    for k in 0..opts.n_radial {
        let r = (k as f64 + 0.5) * dr;
        let sag = radius - (radius * radius - r * r).max(0.0).sqrt();
        let w = r * dr * dphi;
        for j in 0..opts.n_azimuthal {
            let phi = j as f64 * dphi;
            let (x, y) = (r * phi.cos(), r * phi.sin());
            let vs = sphere_pot.grid.sample_clamped(x + scx, y + scy);
            let vp = plate_pot.grid.sample_periodic(x + offset.0, y + offset.1);
            nodes.push((sag, w, vs - vp));
        }
    }
    let mut u = Vec::with_capacity(a_dense.len());
    for &a in a_dense {
        let v0 = match opts.v0_override {
            Some(v) => v,
            None => {
                // minimize the global electrostatic force: weights 1/h^2
                let (mut num, mut den) = (0.0, 0.0);
                for &(sag, w, v) in &nodes {
                    let h = a + sag;
                    num += w * v / (h * h);
                    den += w / (h * h);
                }
                num / den
            }
        };
        let mut energy = 0.0;
        for &(sag, w, v) in &nodes {
            let dv = v - v0;
            energy += w * EPS_0 * dv * dv / (2.0 * (a + sag));
        }
        u.push(energy);
    }
    EnergyCurve {
        a: a_dense.to_vec(),
        u,
    }
}

/// Log-log second differences of the energy curve; outliers mark
/// integration artifacts.
fn curve_is_smooth(curve: &EnergyCurve, mad_factor: f64) -> bool {
    if curve.u.iter().all(|&u| u < 1e-300) {
        return true; // identically zero energy (compensated uniform case)
    }
    if curve.u.iter().any(|&u| u <= 0.0) {
        return false;
    }
    let ln_u: Vec<f64> = curve.u.iter().map(|u| u.ln()).collect();
    let ln_a: Vec<f64> = curve.a.iter().map(|a| a.ln()).collect();
    let mut sec = Vec::with_capacity(ln_u.len().saturating_sub(2));
    for i in 1..ln_u.len() - 1 {
        let d1 = (ln_u[i] - ln_u[i - 1]) / (ln_a[i] - ln_a[i - 1]);
        let d2 = (ln_u[i + 1] - ln_u[i]) / (ln_a[i + 1] - ln_a[i]);
        sec.push(d2 - d1);
    }
    let m = median(&sec);
    let spread = mad(&sec).max(1e-9);
    sec.iter().all(|s| (s - m).abs() <= mad_factor * spread)
}

/// Electrostatic patch gradient over `n_mc` accepted placements.
///
/// `flat_gradient` supplies the smooth Casimir gradient on `a_grid` so the
/// multiplicative `eta_patch` can be reported alongside the additive
/// gradient. Potential maps must cover the interaction spot sqrt(2 a R).
pub fn patch_gradient(
    a_grid: &[f64],
    sphere_pot: &PotentialMap,
    plate_pot: &PotentialMap,
    radius: f64,
    flat_gradient: &[f64],
    n_mc: usize,
    opts: &PatchOptions,
) -> Result<PatchCorrection, SurfaceError> {
    assert!(n_mc >= 1, "n_mc must be at least 1");
    if a_grid.is_empty() || a_grid.len() != flat_gradient.len() {
        return Err(SurfaceError::Alignment(
            "a_grid and flat_gradient must be aligned and non-empty".into(),
        ));
    }
    let a_max = a_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let a_min = a_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let spot = (2.0 * a_max * radius).sqrt();
    for (name, map) in [("sphere", sphere_pot), ("plate", plate_pot)] {
        let (sx, sy) = map.grid.side_length();
        if sx < spot || sy < spot {
            return Err(SurfaceError::Geometry(format!(
                "{name} potential map ({:.2e} x {:.2e} m) does not cover the interaction spot {:.2e} m",
                sx, sy, spot
            )));
        }
    }

    // dense energy grid with margins for differentiation
    let n_dense = (3 * a_grid.len()).max(40);
    let lo = a_min / 1.35;
    let hi = a_max * 1.35;
    let a_dense: Vec<f64> = (0..n_dense)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n_dense - 1) as f64))
        .collect();

    let (px, py) = plate_pot.grid.side_length();
    let max_attempts = opts.max_attempt_factor.max(1) * n_mc;
    let mut grads: Vec<Vec<f64>> = Vec::with_capacity(n_mc);
    let mut etas: Vec<Vec<f64>> = Vec::with_capacity(n_mc);
    let mut attempts = 0usize;
    const BLOCK: usize = 16;
    while grads.len() < n_mc && attempts < max_attempts {
        let block_n = BLOCK.min(max_attempts - attempts);
        let results: Vec<Option<Vec<f64>>> = (attempts..attempts + block_n)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(k as u64 + 1);
                let offset = (rng.gen_range(0.0..px), rng.gen_range(0.0..py));
                let curve = energy_curve(&a_dense, sphere_pot, plate_pot, radius, offset, opts);
                if !curve_is_smooth(&curve, opts.outlier_mad_factor) {
                    return None;
                }
                let spline = CubicSpline::natural(curve.a.clone(), curve.u.clone());
                Some(a_grid.iter().map(|&a| spline.second_deriv(a)).collect())
            })
            .collect();
        attempts += block_n;
        for g in results.into_iter().flatten() {
            if grads.len() < n_mc {
                let eta: Vec<f64> = g
                    .iter()
                    .zip(flat_gradient)
                    .map(|(gp, gf)| 1.0 + gp / gf)
                    .collect();
                grads.push(g);
                etas.push(eta);
            }
        }
    }

    let rule = format!(
        "log-log energy second differences within {} MAD of the median",
        opts.outlier_mad_factor
    );
    if grads.len() < n_mc {
        return Err(SurfaceError::SamplingExhausted {
            accepted: grads.len(),
            attempts,
            requested: n_mc,
        });
    }
    Ok(PatchCorrection {
        gradient: CorrectionResult::from_samples(a_grid, &grads, attempts, &rule),
        eta: CorrectionResult::from_samples(a_grid, &etas, attempts, &rule),
    })
}

//! Monte-Carlo roughness correction in the proximity force approximation.
//!
//! For a lateral placement `(x_o, y_o)` of the tiled plate map the local
//! gap under the sphere is
//!
//! ```text
//! h(r, phi) = a + R - sqrt(R^2 - r^2) - r_s(r, phi) - r_p(r + shift)
//! ```
//!
//! and the corrected gradient is the polar-quadrature integral of the
//! parallel-plate pressure derivative over the interaction zone. The
//! correction factor `eta(a)` divides by the same quadrature applied to
//! smooth surfaces, so flat maps give exactly 1 regardless of the grid.

use super::{CorrectionResult, HeightMap, SurfaceError};
use crate::math::spline::CubicSpline;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoughnessOptions {
    pub seed: u64,
    /// Placements whose minimum local gap at the smallest separation falls
    /// below this are rejected [m].
    pub min_gap: f64,
    /// Give up after `max_attempt_factor * n_mc` candidate placements.
    pub max_attempt_factor: usize,
    pub n_radial: usize,
    pub n_azimuthal: usize,
    /// Radial extent of the quadrature in units of sqrt(2 a R).
    pub radial_extent_factor: f64,
    /// Knots of the smooth-gradient interpolation table.
    pub table_points: usize,
}

impl Default for RoughnessOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            min_gap: 30e-9,
            max_attempt_factor: 20,
            n_radial: 64,
            n_azimuthal: 32,
            radial_extent_factor: 3.0,
            table_points: 240,
        }
    }
}

/// Log-log interpolation of a positive, decreasing gradient law; supplies
/// the pressure-derivative integrand without re-running the Lifshitz sum
/// at every quadrature node.
pub(crate) struct GradientTable {
    spline: CubicSpline, // ln g vs ln h
}

impl GradientTable {
    pub(crate) fn build(
        gradient_fn: &(impl Fn(f64) -> f64 + ?Sized),
        h_min: f64,
        h_max: f64,
        n: usize,
    ) -> Result<Self, SurfaceError> {
        let mut ln_h = Vec::with_capacity(n);
        let mut ln_g = Vec::with_capacity(n);
        for i in 0..n {
            let h = h_min * (h_max / h_min).powf(i as f64 / (n - 1) as f64);
            let g = gradient_fn(h);
            if !(g > 0.0) {
                return Err(SurfaceError::Geometry(format!(
                    "gradient law must be positive; got {g} at gap {h:.3e} m"
                )));
            }
            ln_h.push(h.ln());
            ln_g.push(g.ln());
        }
        Ok(Self {
            spline: CubicSpline::natural(ln_h, ln_g),
        })
    }

    pub(crate) fn value(&self, h: f64) -> f64 {
        self.spline.eval(h.ln()).exp()
    }

    /// `-dg/dh > 0` for a decreasing attractive law.
    pub(crate) fn neg_deriv(&self, h: f64) -> f64 {
        -self.value(h) * self.spline.deriv(h.ln()) / h
    }
}

struct PolarGrid {
    /// (x, y, weight) nodes.
    nodes: Vec<(f64, f64, f64)>,
    /// sag(r) = R - sqrt(R^2 - r^2) per node.
    sag: Vec<f64>,
}

fn polar_grid(a: f64, radius: f64, opts: &RoughnessOptions) -> PolarGrid {
    let r_max = opts.radial_extent_factor * (2.0 * a * radius).sqrt();
    let dr = r_max / opts.n_radial as f64;
    let dphi = 2.0 * std::f64::consts::PI / opts.n_azimuthal as f64;
    let mut nodes = Vec::with_capacity(opts.n_radial * opts.n_azimuthal);
    let mut sag = Vec::with_capacity(nodes.capacity());
    for k in 0..opts.n_radial {
        let r = (k as f64 + 0.5) * dr;
        let s = radius - (radius * radius - r * r).max(0.0).sqrt();
        let w = r * dr * dphi;
        for j in 0..opts.n_azimuthal {
            let phi = j as f64 * dphi;
            nodes.push((r * phi.cos(), r * phi.sin(), w));
            sag.push(s);
        }
    }
    PolarGrid { nodes, sag }
}

/// Corrected-to-smooth gradient ratio for one plate placement.
///
/// `offset` shifts the plate map; the sphere map stays centered on the
/// point of closest approach.
pub fn roughness_eta_at_shift(
    a: f64,
    sphere_map: &HeightMap,
    plate_map: &HeightMap,
    radius: f64,
    gradient_fn: &(impl Fn(f64) -> f64 + ?Sized),
    offset: (f64, f64),
    opts: &RoughnessOptions,
) -> Result<f64, SurfaceError> {
    let table = build_table(&[a], sphere_map, plate_map, gradient_fn, opts)?;
    Ok(eta_for_shift(
        a, sphere_map, plate_map, radius, &table, offset, opts,
    ))
}

fn build_table(
    a_grid: &[f64],
    sphere_map: &HeightMap,
    plate_map: &HeightMap,
    gradient_fn: &(impl Fn(f64) -> f64 + ?Sized),
    opts: &RoughnessOptions,
) -> Result<GradientTable, SurfaceError> {
    let a_min = a_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let a_max = a_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s_s = sphere_map.grid.stats();
    let s_p = plate_map.grid.stats();
    let buffer = s_s.peak_peak + s_p.peak_peak + 1e-9;
    let sag_max = 0.5 * (opts.radial_extent_factor * opts.radial_extent_factor) * 2.0 * a_max;
    let h_min = (opts.min_gap * 0.5).min(a_min * 0.5).max(1e-10);
    let h_max = a_max + sag_max + buffer;
    GradientTable::build(gradient_fn, h_min, h_max, opts.table_points)
}

fn eta_for_shift(
    a: f64,
    sphere_map: &HeightMap,
    plate_map: &HeightMap,
    radius: f64,
    table: &GradientTable,
    offset: (f64, f64),
    opts: &RoughnessOptions,
) -> f64 {
    let grid = polar_grid(a, radius, opts);
    let (scx, scy) = {
        let (sx, sy) = sphere_map.grid.side_length();
        (0.5 * sx, 0.5 * sy)
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &(x, y, w)) in grid.nodes.iter().enumerate() {
        let sag = grid.sag[i];
        let rs = sphere_map.grid.sample_clamped(x + scx, y + scy);
        let rp = plate_map.grid.sample_periodic(x + offset.0, y + offset.1);
        let h_rough = (a + sag - rs - rp).max(1e-10);
        num += w * table.neg_deriv(h_rough);
        den += w * table.neg_deriv(a + sag);
    }
    num / den
}

fn min_gap_for_shift(
    a: f64,
    sphere_map: &HeightMap,
    plate_map: &HeightMap,
    radius: f64,
    offset: (f64, f64),
    opts: &RoughnessOptions,
) -> f64 {
    let grid = polar_grid(a, radius, opts);
    let (scx, scy) = {
        let (sx, sy) = sphere_map.grid.side_length();
        (0.5 * sx, 0.5 * sy)
    };
    let mut min_gap = f64::INFINITY;
    for (i, &(x, y, _)) in grid.nodes.iter().enumerate() {
        let sag = grid.sag[i];
        let rs = sphere_map.grid.sample_clamped(x + scx, y + scy);
        let rp = plate_map.grid.sample_periodic(x + offset.0, y + offset.1);
        min_gap = min_gap.min(a + sag - rs - rp);
    }
    min_gap
}

/// Monte-Carlo roughness correction over `n_mc` accepted placements.
///
/// `gradient_fn` is the smooth sphere-plate gradient law (from the
/// Lifshitz module or analytic). Placements are drawn from a counter-based
/// stream keyed by placement index, evaluated in parallel, and accepted in
/// index order, so the result replays bit-for-bit for a fixed seed.
pub fn roughness_eta(
    a_grid: &[f64],
    sphere_map: &HeightMap,
    plate_map: &HeightMap,
    radius: f64,
    gradient_fn: &(impl Fn(f64) -> f64 + Sync + ?Sized),
    n_mc: usize,
    opts: &RoughnessOptions,
) -> Result<CorrectionResult, SurfaceError> {
    assert!(n_mc >= 1, "n_mc must be at least 1");
    if a_grid.is_empty() {
        return Err(SurfaceError::Geometry("empty separation grid".into()));
    }
    let table = build_table(a_grid, sphere_map, plate_map, gradient_fn, opts)?;
    let a_min = a_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let (px, py) = plate_map.grid.side_length();

    let max_attempts = opts.max_attempt_factor.max(1) * n_mc;
    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(n_mc);
    let mut attempts = 0usize;
    const BLOCK: usize = 32;
    while accepted.len() < n_mc && attempts < max_attempts {
        let block_n = BLOCK.min(max_attempts - attempts);
        let results: Vec<Option<Vec<f64>>> = (attempts..attempts + block_n)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(k as u64 + 1);
                let offset = (rng.gen_range(0.0..px), rng.gen_range(0.0..py));
                if min_gap_for_shift(a_min, sphere_map, plate_map, radius, offset, opts)
                    < opts.min_gap
                {
                    return None;
                }
                Some(
                    a_grid
                        .iter()
                        .map(|&a| {
                            eta_for_shift(a, sphere_map, plate_map, radius, &table, offset, opts)
                        })
                        .collect(),
                )
            })
            .collect();
        attempts += block_n;
        for r in results.into_iter().flatten() {
            if accepted.len() < n_mc {
                accepted.push(r);
            }
        }
    }

    let rule = format!("min local gap >= {:.1e} m at smallest separation", opts.min_gap);
    if accepted.len() < n_mc {
        return Err(SurfaceError::SamplingExhausted {
            accepted: accepted.len(),
            attempts,
            requested: n_mc,
        });
    }
    Ok(CorrectionResult::from_samples(
        a_grid, &accepted, attempts, &rule,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::synth::{synthetic_map, SyntheticMapConfig};
    use crate::surfaces::{GridMap, MapRole, MapUnit};

    const R: f64 = 77.9e-6;

    fn flat_map(nx: usize, pitch: f64, value: f64, role: MapRole) -> HeightMap {
        HeightMap::new(
            GridMap::new(nx, nx, pitch, vec![value; nx * nx], MapUnit::Meters).unwrap(),
            role,
        )
    }

    fn power_law(h: f64) -> f64 {
        // ideal-Casimir-like gradient law, K/h^4
        1e-31 / (h * h * h * h)
    }

    #[test]
    fn flat_maps_give_exactly_one() {
        let sphere = flat_map(32, 1e-6, 0.0, MapRole::Sphere);
        let plate = flat_map(32, 1e-6, 0.0, MapRole::Plate);
        let a_grid = [80e-9, 100e-9, 120e-9];
        let opts = RoughnessOptions::default();
        let res = roughness_eta(&a_grid, &sphere, &plate, R, &power_law, 5, &opts).unwrap();
        assert!(res.eta.iter().all(|&e| e == 1.0), "{:?}", res.eta);
        assert!(res.band_lo.iter().zip(&res.band_hi).all(|(l, h)| *l == 1.0 && *h == 1.0));
        assert_eq!(res.n_accepted, 5);
    }

    #[test]
    fn uniform_plate_offset_shifts_the_law() {
        // plate standing h0 closer: eta(a) ~ g(a - h0)/g(a)
        let h0 = 5e-9;
        let sphere = flat_map(32, 1e-6, 0.0, MapRole::Sphere);
        let plate = flat_map(32, 1e-6, h0, MapRole::Plate);
        let opts = RoughnessOptions {
            radial_extent_factor: 6.0,
            n_radial: 128,
            ..RoughnessOptions::default()
        };
        let a = 100e-9;
        let eta =
            roughness_eta_at_shift(a, &sphere, &plate, R, &power_law, (0.0, 0.0), &opts).unwrap();
        let expected = power_law(a - h0) / power_law(a);
        assert!(
            (eta - expected).abs() / expected < 2e-3,
            "eta {eta} vs {expected}"
        );
    }

    #[test]
    fn matches_dense_quadrature_oracle_at_one_shift() {
        let cfg = SyntheticMapConfig {
            nx: 128,
            ny: 128,
            pitch: 0.15e-6,
            rms: 3e-9,
            correlation_length: 0.4e-6,
            spikes: None,
            seed: 21,
        };
        let sphere = HeightMap::new(synthetic_map(&cfg, MapUnit::Meters).unwrap(), MapRole::Sphere);
        let plate = HeightMap::new(
            synthetic_map(
                &SyntheticMapConfig {
                    seed: 22,
                    ..cfg.clone()
                },
                MapUnit::Meters,
            )
            .unwrap(),
            MapRole::Plate,
        );
        let a = 80e-9;
        let offset = (1.3e-6, 2.1e-6);
        let opts = RoughnessOptions::default();
        let eta =
            roughness_eta_at_shift(a, &sphere, &plate, R, &power_law, offset, &opts).unwrap();

        // brute-force dense polar quadrature with the analytic derivative
        let dense = |n_r: usize, n_phi: usize| {
            let r_max = 3.0 * (2.0 * a * R).sqrt();
            let dr = r_max / n_r as f64;
            let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
            let (sx, sy) = sphere.grid.side_length();
            let (mut num, mut den) = (0.0, 0.0);
            for k in 0..n_r {
                let r = (k as f64 + 0.5) * dr;
                let sag = R - (R * R - r * r).sqrt();
                for j in 0..n_phi {
                    let phi = j as f64 * dphi;
                    let (x, y) = (r * phi.cos(), r * phi.sin());
                    let rs = sphere.grid.sample_clamped(x + 0.5 * sx, y + 0.5 * sy);
                    let rp = plate.grid.sample_periodic(x + offset.0, y + offset.1);
                    let h = a + sag - rs - rp;
                    let w = r * dr * dphi;
                    // -d/dh (K/h^4) = 4K/h^5
                    num += w * 4.0 * 1e-31 / h.powi(5);
                    den += w * 4.0 * 1e-31 / (a + sag).powi(5);
                }
            }
            num / den
        };
        let oracle = dense(512, 256);
        assert!(
            (eta - oracle).abs() / oracle < 5e-3,
            "eta {eta} vs oracle {oracle}"
        );
        assert!(eta > 1.0);
    }

    #[test]
    fn eta_grows_as_separation_shrinks() {
        let cfg = SyntheticMapConfig {
            nx: 96,
            ny: 96,
            pitch: 0.2e-6,
            rms: 3e-9,
            correlation_length: 0.4e-6,
            spikes: None,
            seed: 31,
        };
        let sphere = HeightMap::new(synthetic_map(&cfg, MapUnit::Meters).unwrap(), MapRole::Sphere);
        let plate = HeightMap::new(
            synthetic_map(
                &SyntheticMapConfig {
                    seed: 32,
                    ..cfg.clone()
                },
                MapUnit::Meters,
            )
            .unwrap(),
            MapRole::Plate,
        );
        let a_grid = [60e-9, 80e-9, 120e-9, 200e-9];
        let res = roughness_eta(
            &a_grid,
            &sphere,
            &plate,
            R,
            &power_law,
            20,
            &RoughnessOptions::default(),
        )
        .unwrap();
        assert!(res.eta.windows(2).all(|w| w[0] > w[1]), "{:?}", res.eta);
        assert!(res.eta.iter().all(|&e| e > 1.0), "{:?}", res.eta);
    }

    #[test]
    fn fixed_seed_replays_bit_for_bit() {
        let cfg = SyntheticMapConfig {
            nx: 64,
            ny: 64,
            pitch: 0.3e-6,
            rms: 3e-9,
            correlation_length: 0.5e-6,
            spikes: None,
            seed: 41,
        };
        let sphere = HeightMap::new(synthetic_map(&cfg, MapUnit::Meters).unwrap(), MapRole::Sphere);
        let plate = HeightMap::new(
            synthetic_map(
                &SyntheticMapConfig {
                    seed: 42,
                    ..cfg.clone()
                },
                MapUnit::Meters,
            )
            .unwrap(),
            MapRole::Plate,
        );
        let a_grid = [80e-9, 120e-9];
        let opts = RoughnessOptions::default();
        let r1 = roughness_eta(&a_grid, &sphere, &plate, R, &power_law, 8, &opts).unwrap();
        let r2 = roughness_eta(&a_grid, &sphere, &plate, R, &power_law, 8, &opts).unwrap();
        assert_eq!(
            serde_json::to_string(&r1).unwrap(),
            serde_json::to_string(&r2).unwrap()
        );
    }

    #[test]
    fn impossible_min_gap_exhausts_sampling() {
        // plate offset by 60 nm toward the sphere at a = 70 nm leaves
        // less than 30 nm everywhere: every placement is rejected
        let sphere = flat_map(16, 1e-6, 0.0, MapRole::Sphere);
        let plate = flat_map(16, 1e-6, 50e-9, MapRole::Plate);
        let opts = RoughnessOptions {
            max_attempt_factor: 3,
            ..RoughnessOptions::default()
        };
        let err = roughness_eta(&[70e-9], &sphere, &plate, R, &power_law, 4, &opts).unwrap_err();
        assert!(matches!(err, SurfaceError::SamplingExhausted { .. }));
    }
}

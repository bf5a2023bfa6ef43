//! Roughness and electrostatic-patch corrections to the Casimir gradient
//! from gridded AFM topography and KPFM potential maps.
//!
//! Both correction factors are sampled over random lateral placements of
//! the (periodically tiled) plate map against the fixed sphere map, with
//! per-separation means and 68.3% probability bands over the accepted
//! placements. All Monte-Carlo draws come from a counter-based generator
//! seeded per placement index, so results replay bit-for-bit and are
//! independent of thread count.

pub mod combine;
pub mod mapio;
pub mod patch;
pub mod roughness;
pub mod sphere;
pub mod synth;

pub use combine::{combine_corrections, CombinedReduction};
pub use patch::{patch_gradient, PatchCorrection, PatchOptions};
pub use roughness::{roughness_eta, RoughnessOptions};
pub use sphere::{fit_sphere, preprocess_peaks, PreprocessReport, SphereFit};
pub use synth::{synthetic_map, SpikeConfig, SyntheticMapConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("sphere fit is degenerate (surface indistinguishable from a plane)")]
    DegenerateSphereFit,
    #[error("sphere fit failed: {0}")]
    SphereFitFailed(String),
    #[error("sampling exhausted: {accepted} acceptable placements after {attempts} attempts (needed {requested})")]
    SamplingExhausted {
        accepted: usize,
        attempts: usize,
        requested: usize,
    },
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("grid mismatch: {0}")]
    Alignment(String),
    #[error("map io: {0}")]
    Io(String),
}

/// Which body a height map describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapRole {
    Sphere,
    Plate,
}

/// Physical unit of the stored samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapUnit {
    Meters,
    Volts,
}

/// Rectangular sample grid with a square pixel pitch.
///
/// Row-major storage; `(ix, iy)` addresses column `ix` of row `iy`.
/// Masked pixels hold a replacement value (median plane) and are excluded
/// from statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    nx: usize,
    ny: usize,
    pitch: f64,
    data: Vec<f64>,
    mask: Option<Vec<bool>>,
    pub unit: MapUnit,
}

impl GridMap {
    pub fn new(
        nx: usize,
        ny: usize,
        pitch: f64,
        data: Vec<f64>,
        unit: MapUnit,
    ) -> Result<Self, SurfaceError> {
        if nx == 0 || ny == 0 {
            return Err(SurfaceError::InvalidMap("empty grid".into()));
        }
        if data.len() != nx * ny {
            return Err(SurfaceError::InvalidMap(format!(
                "grid data length {} does not match {nx} x {ny}",
                data.len()
            )));
        }
        if !(pitch > 0.0) {
            return Err(SurfaceError::InvalidMap("pixel pitch must be > 0".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(SurfaceError::InvalidMap(
                "grid contains non-finite values".into(),
            ));
        }
        Ok(Self {
            nx,
            ny,
            pitch,
            data,
            mask: None,
            unit,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    /// Physical side lengths (x, y) [m].
    pub fn side_length(&self) -> (f64, f64) {
        (self.nx as f64 * self.pitch, self.ny as f64 * self.pitch)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.data[iy * self.nx + ix]
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn masked_fraction(&self) -> f64 {
        match &self.mask {
            None => 0.0,
            Some(m) => m.iter().filter(|&&b| b).count() as f64 / m.len() as f64,
        }
    }

    pub(crate) fn set_mask(&mut self, mask: Vec<bool>) {
        debug_assert_eq!(mask.len(), self.data.len());
        self.mask = Some(mask);
    }

    pub(crate) fn set_value(&mut self, ix: usize, iy: usize, v: f64) {
        self.data[iy * self.nx + ix] = v;
    }

    /// Bilinear sample at physical coordinates with periodic tiling.
    pub fn sample_periodic(&self, x: f64, y: f64) -> f64 {
        let fx = (x / self.pitch).rem_euclid(self.nx as f64);
        let fy = (y / self.pitch).rem_euclid(self.ny as f64);
        let ix = fx.floor() as usize % self.nx;
        let iy = fy.floor() as usize % self.ny;
        let tx = fx - fx.floor();
        let ty = fy - fy.floor();
        let ix1 = (ix + 1) % self.nx;
        let iy1 = (iy + 1) % self.ny;
        let v00 = self.at(ix, iy);
        let v10 = self.at(ix1, iy);
        let v01 = self.at(ix, iy1);
        let v11 = self.at(ix1, iy1);
        v00 * (1.0 - tx) * (1.0 - ty)
            + v10 * tx * (1.0 - ty)
            + v01 * (1.0 - tx) * ty
            + v11 * tx * ty
    }

    /// Bilinear sample with coordinates clamped to the grid edge; used for
    /// the sphere map, which is fixed and must not repeat.
    pub fn sample_clamped(&self, x: f64, y: f64) -> f64 {
        let fx = (x / self.pitch).clamp(0.0, (self.nx - 1) as f64);
        let fy = (y / self.pitch).clamp(0.0, (self.ny - 1) as f64);
        let ix = (fx.floor() as usize).min(self.nx.saturating_sub(2));
        let iy = (fy.floor() as usize).min(self.ny.saturating_sub(2));
        let tx = (fx - ix as f64).clamp(0.0, 1.0);
        let ty = (fy - iy as f64).clamp(0.0, 1.0);
        let ix1 = (ix + 1).min(self.nx - 1);
        let iy1 = (iy + 1).min(self.ny - 1);
        let v00 = self.at(ix, iy);
        let v10 = self.at(ix1, iy);
        let v01 = self.at(ix, iy1);
        let v11 = self.at(ix1, iy1);
        v00 * (1.0 - tx) * (1.0 - ty)
            + v10 * tx * (1.0 - ty)
            + v01 * (1.0 - tx) * ty
            + v11 * tx * ty
    }

    /// Remove the mean over unmasked pixels.
    pub fn remove_mean(&mut self) {
        let s = self.stats();
        for v in &mut self.data {
            *v -= s.mean;
        }
    }

    /// Mean, rms about the mean, and peak-peak over unmasked pixels.
    pub fn stats(&self) -> SurfaceStats {
        let vals: Vec<f64> = match &self.mask {
            None => self.data.clone(),
            Some(m) => self
                .data
                .iter()
                .zip(m)
                .filter(|(_, &masked)| !masked)
                .map(|(v, _)| *v)
                .collect(),
        };
        let mean = crate::math::stats::mean(&vals);
        let rms = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / vals.len() as f64)
            .sqrt();
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        SurfaceStats {
            mean,
            rms,
            peak_peak: max - min,
        }
    }
}

/// Gridded AFM topography [m].
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    pub grid: GridMap,
    pub role: MapRole,
}

impl HeightMap {
    pub fn new(grid: GridMap, role: MapRole) -> Self {
        Self { grid, role }
    }
}

/// Gridded KPFM surface potential [V].
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialMap {
    pub grid: GridMap,
}

impl PotentialMap {
    pub fn new(grid: GridMap) -> Self {
        Self { grid }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SurfaceStats {
    pub mean: f64,
    pub rms: f64,
    pub peak_peak: f64,
}

/// Statistics of any gridded map.
pub fn surface_stats(grid: &GridMap) -> SurfaceStats {
    grid.stats()
}

/// Monte-Carlo correction output: per-separation factor with 68.3%
/// probability bands over the accepted placements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionResult {
    pub a_grid: Vec<f64>,
    /// Mean correction per separation (dimensionless for eta outputs,
    /// N/m for additive gradients).
    pub eta: Vec<f64>,
    pub band_lo: Vec<f64>,
    pub band_hi: Vec<f64>,
    pub n_accepted: usize,
    pub n_attempted: usize,
    /// Stand-in outlier rule applied to the runs, recorded for audit.
    pub rejection_rule: String,
}

impl CorrectionResult {
    pub(crate) fn from_samples(
        a_grid: &[f64],
        per_shift: &[Vec<f64>],
        n_attempted: usize,
        rejection_rule: &str,
    ) -> Self {
        let n_a = a_grid.len();
        let mut eta = Vec::with_capacity(n_a);
        let mut lo = Vec::with_capacity(n_a);
        let mut hi = Vec::with_capacity(n_a);
        for k in 0..n_a {
            let vals: Vec<f64> = per_shift.iter().map(|s| s[k]).collect();
            let m = crate::math::stats::mean(&vals);
            let (l, h) = crate::math::stats::band_68(&vals);
            // the band always covers the reported mean
            eta.push(m);
            lo.push(l.min(m));
            hi.push(h.max(m));
        }
        Self {
            a_grid: a_grid.to_vec(),
            eta,
            band_lo: lo,
            band_hi: hi,
            n_accepted: per_shift.len(),
            n_attempted,
            rejection_rule: rejection_rule.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_pixel_stats() {
        let g = GridMap::new(2, 1, 1e-7, vec![0.0, 2e-9], MapUnit::Meters).unwrap();
        let s = surface_stats(&g);
        assert_eq!(s.mean, 1e-9);
        assert_eq!(s.rms, 1e-9);
        assert_eq!(s.peak_peak, 2e-9);
    }

    #[test]
    fn constant_map_has_zero_spread() {
        let g = GridMap::new(8, 8, 1e-7, vec![3.0; 64], MapUnit::Volts).unwrap();
        let s = surface_stats(&g);
        assert_eq!(s.rms, 0.0);
        assert_eq!(s.peak_peak, 0.0);
    }

    #[test]
    fn periodic_sampling_wraps() {
        let g = GridMap::new(
            4,
            4,
            1.0,
            (0..16).map(|i| i as f64).collect(),
            MapUnit::Meters,
        )
        .unwrap();
        let inside = g.sample_periodic(1.0, 2.0);
        let wrapped = g.sample_periodic(1.0 + 4.0, 2.0 - 4.0);
        assert!((inside - wrapped).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(GridMap::new(3, 3, 1.0, vec![0.0; 8], MapUnit::Meters).is_err());
    }
}

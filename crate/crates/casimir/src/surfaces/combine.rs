//! Combination of dielectric, roughness, and patch effects into one
//! relative reduction with an asymmetric uncertainty band.

use super::{CorrectionResult, SurfaceError};
use serde::{Deserialize, Serialize};

/// `delta(a) = (gB/gA) * (etaRoughB/etaRoughA) * (etaPatchB/etaPatchA) - 1`
/// with Monte-Carlo band propagation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CombinedReduction {
    pub a_grid: Vec<f64>,
    pub delta: Vec<f64>,
    pub band_lo: Vec<f64>,
    pub band_hi: Vec<f64>,
}

impl CombinedReduction {
    /// Mean of `delta` over a separation window, with the propagated
    /// asymmetric band averaged alongside.
    pub fn window_mean(&self, window: (f64, f64)) -> Option<(f64, f64, f64)> {
        let sel: Vec<usize> = (0..self.a_grid.len())
            .filter(|&i| self.a_grid[i] >= window.0 && self.a_grid[i] <= window.1)
            .collect();
        if sel.is_empty() {
            return None;
        }
        let n = sel.len() as f64;
        let mean = sel.iter().map(|&i| self.delta[i]).sum::<f64>() / n;
        let lo = sel.iter().map(|&i| self.band_lo[i]).sum::<f64>() / n;
        let hi = sel.iter().map(|&i| self.band_hi[i]).sum::<f64>() / n;
        Some((mean, lo, hi))
    }
}

fn check_grid(a: &[f64], b: &[f64], what: &str) -> Result<(), SurfaceError> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x != y) {
        return Err(SurfaceError::Alignment(format!(
            "{what} is not on the shared separation grid"
        )));
    }
    Ok(())
}

/// Relative asymmetric half-widths of a correction factor.
fn rel_bands(c: &CorrectionResult, i: usize) -> (f64, f64) {
    let e = c.eta[i];
    ((c.band_hi[i] - e) / e, (e - c.band_lo[i]) / e)
}

/// Combine two materials' gradients and correction factors into the total
/// relative reduction. All inputs must share one separation grid.
pub fn combine_corrections(
    a_grid: &[f64],
    grad_a: &[f64],
    grad_b: &[f64],
    eta_rough_a: &CorrectionResult,
    eta_rough_b: &CorrectionResult,
    eta_patch_a: &CorrectionResult,
    eta_patch_b: &CorrectionResult,
) -> Result<CombinedReduction, SurfaceError> {
    if grad_a.len() != a_grid.len() || grad_b.len() != a_grid.len() {
        return Err(SurfaceError::Alignment(
            "gradient arrays are not on the shared separation grid".into(),
        ));
    }
    for (c, what) in [
        (eta_rough_a, "eta_rough (A)"),
        (eta_rough_b, "eta_rough (B)"),
        (eta_patch_a, "eta_patch (A)"),
        (eta_patch_b, "eta_patch (B)"),
    ] {
        check_grid(&c.a_grid, a_grid, what)?;
    }

    let n = a_grid.len();
    let mut delta = Vec::with_capacity(n);
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for i in 0..n {
        let ratio = (grad_b[i] / grad_a[i])
            * (eta_rough_b.eta[i] / eta_rough_a.eta[i])
            * (eta_patch_b.eta[i] / eta_patch_a.eta[i]);
        let d = ratio - 1.0;
        // up-fluctuations of B and down-fluctuations of A push the ratio up
        let (up_rb, dn_rb) = rel_bands(eta_rough_b, i);
        let (up_ra, dn_ra) = rel_bands(eta_rough_a, i);
        let (up_pb, dn_pb) = rel_bands(eta_patch_b, i);
        let (up_pa, dn_pa) = rel_bands(eta_patch_a, i);
        let up = (up_rb * up_rb + dn_ra * dn_ra + up_pb * up_pb + dn_pa * dn_pa).sqrt();
        let dn = (dn_rb * dn_rb + up_ra * up_ra + dn_pb * dn_pb + up_pa * up_pa).sqrt();
        delta.push(d);
        hi.push(ratio * (1.0 + up) - 1.0);
        lo.push(ratio * (1.0 - dn) - 1.0);
    }
    Ok(CombinedReduction {
        a_grid: a_grid.to_vec(),
        delta,
        band_lo: lo,
        band_hi: hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_correction(a_grid: &[f64]) -> CorrectionResult {
        CorrectionResult {
            a_grid: a_grid.to_vec(),
            eta: vec![1.0; a_grid.len()],
            band_lo: vec![1.0; a_grid.len()],
            band_hi: vec![1.0; a_grid.len()],
            n_accepted: 1,
            n_attempted: 1,
            rejection_rule: String::new(),
        }
    }

    #[test]
    fn all_unity_gives_zero() {
        let a = [80e-9, 100e-9];
        let g = [2.0e-3, 1.5e-3];
        let u = unit_correction(&a);
        let c = combine_corrections(&a, &g, &g, &u, &u, &u, &u).unwrap();
        assert!(c.delta.iter().all(|&d| d == 0.0));
        assert!(c.band_lo.iter().all(|&d| d == 0.0));
        let (m, _, _) = c.window_mean((70e-9, 120e-9)).unwrap();
        assert_eq!(m, 0.0);
    }

    #[test]
    fn bands_propagate_asymmetrically() {
        let a = [100e-9];
        let g = [1.0];
        let u = unit_correction(&a);
        let wide = CorrectionResult {
            a_grid: a.to_vec(),
            eta: vec![1.0],
            band_lo: vec![0.98],
            band_hi: vec![1.05],
            n_accepted: 1,
            n_attempted: 1,
            rejection_rule: String::new(),
        };
        let c = combine_corrections(&a, &g, &g, &u, &wide, &u, &u).unwrap();
        assert_eq!(c.delta[0], 0.0);
        assert!((c.band_hi[0] - 0.05).abs() < 1e-12);
        assert!((c.band_lo[0] + 0.02).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_an_alignment_error() {
        let a = [80e-9, 100e-9];
        let g = [1.0, 1.0];
        let u = unit_correction(&a);
        let other = unit_correction(&[80e-9, 110e-9]);
        assert!(matches!(
            combine_corrections(&a, &g, &g, &u, &other, &u, &u),
            Err(SurfaceError::Alignment(_))
        ));
    }
}

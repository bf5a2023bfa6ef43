//! Relative reduction of a sample curve against a reference curve.

use super::{AnalysisError, AveragedCurve};
use crate::math::stats::{weighted_mean, Histogram};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionReport {
    /// Separations where both curves are defined [m].
    pub a: Vec<f64>,
    /// `sample/reference - 1` per separation.
    pub delta: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Inverse-variance weighted mean over the window.
    pub window_mean: f64,
    pub window_sigma: f64,
    pub window: (f64, f64),
    /// Distribution of the in-window values (Freedman–Diaconis bins).
    pub histogram: Histogram,
}

fn interp_log(a: &[f64], v: &[f64], at: f64) -> f64 {
    // linear interpolation in ln(a)
    match a.binary_search_by(|x| x.partial_cmp(&at).unwrap()) {
        Ok(i) => v[i],
        Err(0) => v[0],
        Err(i) if i >= a.len() => v[a.len() - 1],
        Err(i) => {
            let t = (at.ln() - a[i - 1].ln()) / (a[i].ln() - a[i - 1].ln());
            v[i - 1] * (1.0 - t) + v[i] * t
        }
    }
}

/// Elementwise `sample/reference - 1` on the overlap, with the weighted
/// window mean and the in-window histogram.
pub fn relative_reduction(
    sample: &AveragedCurve,
    reference: &AveragedCurve,
    window: (f64, f64),
) -> Result<ReductionReport, AnalysisError> {
    sample.validate()?;
    reference.validate()?;
    let olo = sample.a[0].max(reference.a[0]);
    let ohi = sample.a[sample.a.len() - 1].min(reference.a[reference.a.len() - 1]);
    if !(window.0 < ohi && window.1 > olo) || olo >= ohi {
        return Err(AnalysisError::WindowOutsideOverlap {
            lo: window.0,
            hi: window.1,
            olo,
            ohi,
        });
    }
    let mut a_out = Vec::new();
    let mut delta = Vec::new();
    let mut sigma = Vec::new();
    for i in 0..sample.a.len() {
        let a = sample.a[i];
        if a < olo || a > ohi {
            continue;
        }
        let r = interp_log(&reference.a, &reference.value, a);
        let sr = interp_log(&reference.a, &reference.sigma, a);
        let s = sample.value[i];
        let ss = sample.sigma[i];
        if r == 0.0 {
            continue;
        }
        let d = s / r - 1.0;
        let rel = ((ss / s).powi(2) + (sr / r).powi(2)).sqrt();
        a_out.push(a);
        delta.push(d);
        sigma.push((d + 1.0).abs() * rel);
    }
    if a_out.is_empty() {
        return Err(AnalysisError::Empty("no overlapping points".into()));
    }
    let in_window: Vec<usize> = (0..a_out.len())
        .filter(|&i| a_out[i] >= window.0 && a_out[i] <= window.1)
        .collect();
    if in_window.is_empty() {
        return Err(AnalysisError::WindowOutsideOverlap {
            lo: window.0,
            hi: window.1,
            olo,
            ohi,
        });
    }
    let wv: Vec<f64> = in_window.iter().map(|&i| delta[i]).collect();
    let ws: Vec<f64> = in_window.iter().map(|&i| sigma[i]).collect();
    let (window_mean, window_sigma, _) = weighted_mean(&wv, &ws);
    let histogram = Histogram::freedman_diaconis(&wv);
    Ok(ReductionReport {
        a: a_out,
        delta,
        sigma,
        window_mean,
        window_sigma,
        window,
        histogram,
    })
}

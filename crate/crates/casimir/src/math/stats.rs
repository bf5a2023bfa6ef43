//! Order statistics, pairwise summation, and weighted means.

/// Pairwise (cascade) summation; bit-stable regardless of thread count when
/// the input ordering is fixed.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

/// Mean of a slice.
pub fn mean(v: &[f64]) -> f64 {
    pairwise_sum(v) / v.len() as f64
}

/// Population standard deviation about the mean.
pub fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Inverse-variance weighted mean and the standard error of that mean.
///
/// Zero sigmas are treated as exact values (infinite weight): if any are
/// present, the result is the plain mean of the exact points with zero
/// error, and the boolean flag is set.
pub fn weighted_mean(values: &[f64], sigmas: &[f64]) -> (f64, f64, bool) {
    assert_eq!(values.len(), sigmas.len());
    let exact: Vec<f64> = values
        .iter()
        .zip(sigmas)
        .filter(|(_, s)| **s == 0.0)
        .map(|(v, _)| *v)
        .collect();
    if !exact.is_empty() {
        return (mean(&exact), 0.0, true);
    }
    let mut sw = 0.0;
    let mut swx = 0.0;
    for (v, s) in values.iter().zip(sigmas) {
        let w = 1.0 / (s * s);
        sw += w;
        swx += w * v;
    }
    (swx / sw, (1.0 / sw).sqrt(), false)
}

/// Linear-interpolated quantile, `q` in [0, 1].
pub fn quantile(v: &[f64], q: f64) -> f64 {
    assert!(!v.is_empty());
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        s[lo]
    } else {
        s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
    }
}

/// Median.
pub fn median(v: &[f64]) -> f64 {
    quantile(v, 0.5)
}

/// Median absolute deviation about the median.
pub fn mad(v: &[f64]) -> f64 {
    let m = median(v);
    let dev: Vec<f64> = v.iter().map(|x| (x - m).abs()).collect();
    median(&dev)
}

/// 68.3% central probability bounds (15.85% and 84.15% quantiles).
pub fn band_68(v: &[f64]) -> (f64, f64) {
    (quantile(v, 0.1585), quantile(v, 0.8415))
}

/// Histogram with Freedman–Diaconis binning.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn freedman_diaconis(v: &[f64]) -> Self {
        assert!(!v.is_empty());
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let iqr = quantile(v, 0.75) - quantile(v, 0.25);
        let width = 2.0 * iqr / (v.len() as f64).cbrt();
        let nbins = if width > 0.0 && hi > lo {
            (((hi - lo) / width).ceil() as usize).clamp(1, 200)
        } else {
            1
        };
        let mut counts = vec![0u64; nbins];
        let span = (hi - lo).max(f64::MIN_POSITIVE);
        for &x in v {
            let mut i = ((x - lo) / span * nbins as f64) as usize;
            if i >= nbins {
                i = nbins - 1;
            }
            counts[i] += 1;
        }
        let edges = (0..=nbins)
            .map(|i| lo + span * i as f64 / nbins as f64)
            .collect();
        Self { edges, counts }
    }
}

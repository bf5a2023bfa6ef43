//! Frequency-tabulated complex dielectric data and dataset merging.

use super::DielectricError;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Angular frequency above which measured data is replaced by literature
/// values in the bundled pipeline [s^-1].
pub const DEFAULT_CROSSOVER_OMEGA: f64 = 7.53e15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Measured,
    Literature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    /// Angular frequency [s^-1].
    pub omega: f64,
    pub eps_real: f64,
    pub eps_imag: f64,
    pub provenance: Provenance,
}

/// Ordered tabulated spectrum. Frequencies are strictly increasing and
/// measured points carry non-negative loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSpectrum {
    points: Vec<SpectrumPoint>,
}

impl TabulatedSpectrum {
    pub fn new(points: Vec<SpectrumPoint>) -> Result<Self, DielectricError> {
        if points.is_empty() {
            return Err(DielectricError::Spectrum("empty spectrum".into()));
        }
        for w in points.windows(2) {
            if !(w[1].omega > w[0].omega) {
                return Err(DielectricError::Spectrum(format!(
                    "omega not strictly increasing at {:.6e}",
                    w[1].omega
                )));
            }
        }
        for p in &points {
            if p.provenance == Provenance::Measured && p.eps_imag < 0.0 {
                return Err(DielectricError::Spectrum(format!(
                    "measured eps_imag < 0 at omega = {:.6e}",
                    p.omega
                )));
            }
            if !p.omega.is_finite() || p.omega <= 0.0 {
                return Err(DielectricError::Spectrum("non-positive omega".into()));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[SpectrumPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn omega_range(&self) -> (f64, f64) {
        (
            self.points.first().unwrap().omega,
            self.points.last().unwrap().omega,
        )
    }

    /// Tabulate a model on a geometric frequency grid. Points are tagged
    /// `Literature` since synthesized loss may be locally negative for
    /// non-passive fitted tables, which the `Measured` invariant forbids.
    pub fn from_model(
        model: &super::DrudeLorentzModel,
        omega_min: f64,
        omega_max: f64,
        n: usize,
    ) -> Self {
        let ratio = (omega_max / omega_min).powf(1.0 / (n - 1) as f64);
        let points = (0..n)
            .map(|i| {
                let w = omega_min * ratio.powi(i as i32);
                let e = model.eval_complex(num_complex::Complex64::new(w, 0.0));
                SpectrumPoint {
                    omega: w,
                    eps_real: e.re,
                    eps_imag: e.im,
                    provenance: Provenance::Literature,
                }
            })
            .collect();
        Self { points }
    }

    /// Read the CSV interchange format
    /// `omega_rad_per_s, eps_real, eps_imag, provenance`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, DielectricError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| DielectricError::Io(format!("line {}: {e}", i + 2)))?;
            let field = |k: usize| -> Result<f64, DielectricError> {
                rec.get(k)
                    .ok_or_else(|| DielectricError::Io(format!("line {}: missing column {k}", i + 2)))?
                    .parse::<f64>()
                    .map_err(|e| DielectricError::Io(format!("line {}: {e}", i + 2)))
            };
            let provenance = match rec.get(3).unwrap_or("measured") {
                "literature" => Provenance::Literature,
                _ => Provenance::Measured,
            };
            points.push(SpectrumPoint {
                omega: field(0)?,
                eps_real: field(1)?,
                eps_imag: field(2)?,
                provenance,
            });
        }
        Self::new(points)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self, DielectricError> {
        let f = std::fs::File::open(path)
            .map_err(|e| DielectricError::Io(format!("{}: {e}", path.display())))?;
        Self::read_csv(f)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "omega_rad_per_s,eps_real,eps_imag,provenance")?;
        for p in &self.points {
            writeln!(
                w,
                "{:.9e},{:.9e},{:.9e},{}",
                p.omega,
                p.eps_real,
                p.eps_imag,
                match p.provenance {
                    Provenance::Measured => "measured",
                    Provenance::Literature => "literature",
                }
            )?;
        }
        Ok(())
    }
}

/// Concatenate a measured dataset (kept up to `crossover_omega`) with
/// literature data above it, preserving frequency order.
///
/// Fails when the literature data leaves a gap of more than one decade
/// above the last kept measured point.
pub fn merge_with_literature(
    measured: &TabulatedSpectrum,
    literature: &TabulatedSpectrum,
    crossover_omega: f64,
) -> Result<TabulatedSpectrum, DielectricError> {
    let lit_above: Vec<SpectrumPoint> = literature
        .points()
        .iter()
        .filter(|p| p.omega > crossover_omega)
        .map(|p| SpectrumPoint {
            provenance: Provenance::Literature,
            ..*p
        })
        .collect();
    if lit_above.is_empty() {
        return Err(DielectricError::Spectrum(format!(
            "literature dataset has no points above the crossover {crossover_omega:.3e}"
        )));
    }
    let mut points: Vec<SpectrumPoint> = measured
        .points()
        .iter()
        .filter(|p| p.omega <= crossover_omega)
        .map(|p| SpectrumPoint {
            provenance: Provenance::Measured,
            ..*p
        })
        .collect();
    if let Some(last) = points.last() {
        let first_lit = lit_above[0].omega;
        if first_lit / last.omega > 10.0 {
            return Err(DielectricError::SpectralGap {
                last_measured: last.omega,
                first_literature: first_lit,
            });
        }
    }
    points.extend(lit_above);
    points.dedup_by(|a, b| a.omega == b.omega);
    TabulatedSpectrum::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mk(omegas: &[f64], prov: Provenance) -> TabulatedSpectrum {
        TabulatedSpectrum::new(
            omegas
                .iter()
                .map(|&w| SpectrumPoint {
                    omega: w,
                    eps_real: 1.5,
                    eps_imag: 0.1,
                    provenance: prov,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_datasets_merge_to_input() {
        let omegas: Vec<f64> = (0..20).map(|i| 1e14 * 1.8f64.powi(i)).collect();
        let a = mk(&omegas, Provenance::Measured);
        let b = mk(&omegas, Provenance::Literature);
        let merged = merge_with_literature(&a, &b, DEFAULT_CROSSOVER_OMEGA).unwrap();
        let vals: Vec<f64> = merged.points().iter().map(|p| p.omega).collect();
        assert_eq!(vals, omegas);
    }

    #[test]
    fn adjacent_datasets_merge_ordered() {
        let a = mk(&[1e14, 1e15, 7e15], Provenance::Measured);
        let b = mk(&[7.6e15, 2e16, 1e17], Provenance::Literature);
        let merged = merge_with_literature(&a, &b, DEFAULT_CROSSOVER_OMEGA).unwrap();
        assert_eq!(merged.len(), 6);
        assert!(merged
            .points()
            .windows(2)
            .all(|w| w[1].omega > w[0].omega));
        assert_eq!(merged.points()[2].provenance, Provenance::Measured);
        assert_eq!(merged.points()[3].provenance, Provenance::Literature);
    }

    #[test]
    fn decade_gap_is_an_error() {
        let a = mk(&[1e14, 1e15, 7.53e15], Provenance::Measured);
        let b = mk(&[1e17, 2e17], Provenance::Literature);
        let err = merge_with_literature(&a, &b, DEFAULT_CROSSOVER_OMEGA).unwrap_err();
        assert!(matches!(err, DielectricError::SpectralGap { .. }));
    }

    #[test]
    fn measured_negative_loss_rejected() {
        let r = TabulatedSpectrum::new(vec![SpectrumPoint {
            omega: 1e14,
            eps_real: 1.0,
            eps_imag: -0.2,
            provenance: Provenance::Measured,
        }]);
        assert!(r.is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = mk(&[1e14, 1e15], Provenance::Measured);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = TabulatedSpectrum::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }
}

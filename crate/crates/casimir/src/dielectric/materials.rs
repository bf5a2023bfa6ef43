//! Bundled fitted models for the gold reference surface and the
//! photosystem I monolayer, shipped as plain-text parameter files.
//!
//! Both tables contain negative oscillator strengths and dampings. The
//! closed-form analytic continuation of such terms develops poles on the
//! positive imaginary axis (the denominator `wj^2 + g x + x^2` acquires
//! real roots when `g < -2 wj`), so the imaginary-axis response used by
//! the Lifshitz pipeline is the Kramers–Kronig continuation of the
//! real-axis loss, which stays smooth and above unity. Construction
//! validates that property on a log grid over the Matsubara range and
//! panics on violation, since that would mean a corrupted data file.

use super::kk::KkContinuation;
use super::{DielectricError, DrudeLorentzModel, OscillatorTerm};
use once_cell::sync::Lazy;

/// A bundled, validated material: the fitted model plus its imaginary-axis
/// continuation.
#[derive(Debug, Clone)]
pub struct BundledMaterial {
    pub name: &'static str,
    pub model: DrudeLorentzModel,
    pub continuation: KkContinuation,
}

/// Frequency range over which bundled continuations are validated [s^-1].
pub const VALIDATION_RANGE: (f64, f64) = (1e11, 1e18);

/// Parse the columnar parameter file format.
pub fn parse_model_table(text: &str) -> Result<DrudeLorentzModel, DielectricError> {
    let mut omega_p = None;
    let mut tau_d = None;
    let mut oscillators = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: &str| DielectricError::Io(format!("line {}: {msg}", lineno + 1));
        match fields[0] {
            "omega_p" => {
                omega_p = Some(
                    fields
                        .get(1)
                        .ok_or_else(|| bad("missing omega_p value"))?
                        .parse::<f64>()
                        .map_err(|e| bad(&e.to_string()))?,
                )
            }
            "tau_D" => {
                tau_d = Some(
                    fields
                        .get(1)
                        .ok_or_else(|| bad("missing tau_D value"))?
                        .parse::<f64>()
                        .map_err(|e| bad(&e.to_string()))?,
                )
            }
            _ => {
                if fields.len() != 4 {
                    return Err(bad("oscillator rows need: j omega_j xi_j gamma_j"));
                }
                // scale by appending the exponent to the decimal string, so
                // the stored f64 is exactly the rounded decimal of the table
                let scaled = |s: &str, exp: i32| -> Result<f64, DielectricError> {
                    if s.contains(['e', 'E']) {
                        s.parse::<f64>()
                            .map(|v| v * 10f64.powi(exp))
                            .map_err(|e| bad(&e.to_string()))
                    } else {
                        format!("{s}e{exp}")
                            .parse::<f64>()
                            .map_err(|e| bad(&e.to_string()))
                    }
                };
                oscillators.push(OscillatorTerm {
                    omega: scaled(fields[1], 15)?,
                    strength: scaled(fields[2], 30)?,
                    gamma: scaled(fields[3], 15)?,
                });
            }
        }
    }
    DrudeLorentzModel::new(
        omega_p.ok_or_else(|| DielectricError::Io("missing omega_p".into()))?,
        tau_d.ok_or_else(|| DielectricError::Io("missing tau_D".into()))?,
        oscillators,
    )
}

fn build(name: &'static str, table: &str) -> BundledMaterial {
    let model = parse_model_table(table)
        .unwrap_or_else(|e| panic!("bundled table for {name} failed to parse: {e}"));
    let continuation = KkContinuation::of_model(&model);
    // hard validation: the response consumed by the Lifshitz sum must be
    // a physically sensible eps(i xi) > 1 over the whole validated range
    let (lo, hi) = VALIDATION_RANGE;
    let n = 300;
    for i in 0..n {
        let xi = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
        let e = continuation
            .eval(xi)
            .unwrap_or_else(|err| panic!("bundled {name}: continuation failed at xi={xi:e}: {err}"));
        assert!(
            e > 1.0,
            "bundled {name}: eps(i xi) = {e} <= 1 at xi = {xi:e} s^-1"
        );
    }
    BundledMaterial {
        name,
        model,
        continuation,
    }
}

static GOLD: Lazy<BundledMaterial> =
    Lazy::new(|| build("gold", include_str!("../../data/gold_drude_lorentz.dat")));

static PSI: Lazy<BundledMaterial> =
    Lazy::new(|| build("psi", include_str!("../../data/psi_drude_lorentz.dat")));

/// The gold reference surface.
pub fn gold() -> &'static BundledMaterial {
    &GOLD
}

/// The photosystem I monolayer on gold.
pub fn psi() -> &'static BundledMaterial {
    &PSI
}

/// Look a bundled material up by name (`gold`/`au`, `psi`).
pub fn by_name(name: &str) -> Option<&'static BundledMaterial> {
    match name.to_ascii_lowercase().as_str() {
        "gold" | "au" => Some(gold()),
        "psi" | "ps1" | "ps_i" => Some(psi()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dielectric::eval_imag_axis;

    #[test]
    fn gold_table_parses_bit_for_bit() {
        let m = &gold().model;
        assert_eq!(m.omega_p, 1.2740e16);
        assert_eq!(m.tau_d, 1.5549e-14);
        assert_eq!(m.oscillators.len(), 23);
        assert_eq!(m.oscillators[0].omega, 0.54968e15);
        assert_eq!(m.oscillators[0].strength, 0.35285e30);
        assert_eq!(m.oscillators[0].gamma, 0.16020e15);
        assert_eq!(m.oscillators[14].gamma, -7.2073e15); // row 15: negative damping
        assert_eq!(m.oscillators[16].strength, -2124.9e30); // row 17
        assert_eq!(m.oscillators[22].gamma, 3713.0e15);
    }

    #[test]
    fn psi_table_parses_bit_for_bit() {
        let m = &psi().model;
        assert_eq!(m.omega_p, 1.2008e16);
        assert_eq!(m.tau_d, 1.6114e-14);
        assert_eq!(m.oscillators.len(), 27);
        assert_eq!(m.oscillators[0].strength, 0.18258e30);
        assert_eq!(m.oscillators[19].strength, -83.292e30); // row 20
        assert_eq!(m.oscillators[19].gamma, -38.195e15);
        assert_eq!(m.oscillators[26].gamma, 4193.8e15);
    }

    #[test]
    fn first_matsubara_continuation_values() {
        // closed-form continuation at the first Matsubara frequency,
        // frozen from the independent term-by-term summation script
        let xi = 2.436e14;
        let au = eval_imag_axis(&gold().model, xi);
        assert!((au - 2171.826_504_277_895_8).abs() / au < 1e-12, "{au}");
        let ps = eval_imag_axis(&psi().model, xi);
        assert!((ps - 1945.537_037_738_569_8).abs() / ps < 1e-12, "{ps}");
        // the KK continuation agrees there to better than 0.1%
        let au_kk = gold().continuation.eval(xi).unwrap();
        assert!((au_kk - au).abs() / au < 1e-3, "kk {au_kk} vs direct {au}");
    }

    #[test]
    fn bundled_continuations_exceed_unity_everywhere() {
        for mat in [gold(), psi()] {
            for i in 0..200 {
                let xi = 1e11 * (1e18f64 / 1e11).powf(i as f64 / 199.0);
                assert!(mat.continuation.eval(xi).unwrap() > 1.0);
            }
        }
    }

    #[test]
    fn direct_continuation_of_gold_has_imaginary_axis_pathology() {
        // documents why the pipeline uses the KK continuation: the fitted
        // row 17 puts real roots into wj^2 + g x + x^2
        let m = &gold().model;
        let dipped = (0..400).any(|i| {
            let xi = 1e15 * (1e17f64 / 1e15).powf(i as f64 / 399.0);
            eval_imag_axis(m, xi) < 1.0
        });
        assert!(dipped);
    }
}

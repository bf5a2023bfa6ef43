//! Synchronous least-squares fit of the Drude–Lorentz model to a tabulated
//! complex dielectric function.
//!
//! Residuals are formed on double-logarithmic scales: both log|eps'| and
//! log eps'' are matched against the tabulated values at log-spaced
//! frequencies, with equal weight on the two components. The minimizer is
//! damped least squares with an analytic Jacobian; since many-oscillator
//! fits have plenty of local minima, a configurable number of perturbed
//! restarts runs in parallel and the best basin wins.

use super::{DielectricError, DrudeLorentzModel, OscillatorTerm, TabulatedSpectrum};
use crate::math::lm::{levenberg_marquardt, LmOptions};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Floor added inside the logarithms so vanishing components stay finite.
const LOG_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    /// Number of perturbed restarts (the unperturbed start is always run).
    pub multi_starts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            multi_starts: 8,
            max_iterations: 300,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n_starts: usize,
    /// Set when the plasma frequency ran into the omega_p -> 0 boundary,
    /// i.e. the data wanted no free-carrier term.
    pub boundary_omega_p: bool,
    /// Residual weighting between log eps' and log eps''.
    pub weighting: String,
}

struct Problem<'a> {
    omega: Vec<f64>,
    ln_re: Vec<f64>,
    ln_im: Vec<f64>,
    sign_re: Vec<f64>,
    n_osc: usize,
    _spectrum: &'a TabulatedSpectrum,
}

impl<'a> Problem<'a> {
    fn new(spectrum: &'a TabulatedSpectrum, n_osc: usize) -> Self {
        let omega: Vec<f64> = spectrum.points().iter().map(|p| p.omega).collect();
        let ln_re = spectrum
            .points()
            .iter()
            .map(|p| (p.eps_real.abs() + LOG_FLOOR).ln())
            .collect();
        let ln_im = spectrum
            .points()
            .iter()
            .map(|p| (p.eps_imag.abs() + LOG_FLOOR).ln())
            .collect();
        let sign_re = spectrum
            .points()
            .iter()
            .map(|p| p.eps_real.signum())
            .collect();
        Self {
            omega,
            ln_re,
            ln_im,
            sign_re,
            n_osc,
            _spectrum: spectrum,
        }
    }

    fn unpack(&self, x: &[f64]) -> DrudeLorentzModel {
        let omega_p = x[0].exp();
        let tau_d = x[1].exp();
        let oscillators = (0..self.n_osc)
            .map(|j| {
                let w = x[2 + 3 * j].exp();
                OscillatorTerm {
                    omega: w,
                    strength: x[3 + 3 * j] * w * w,
                    gamma: x[4 + 3 * j] * w,
                }
            })
            .collect();
        DrudeLorentzModel {
            omega_p,
            tau_d,
            oscillators,
        }
    }

    fn pack(model: &DrudeLorentzModel) -> Vec<f64> {
        let mut x = vec![model.omega_p.max(1e-30).ln(), model.tau_d.ln()];
        for o in &model.oscillators {
            x.push(o.omega.ln());
            x.push(o.strength / (o.omega * o.omega));
            x.push(o.gamma / o.omega);
        }
        x
    }

    fn residuals(&self, x: &[f64]) -> DVector<f64> {
        let m = self.unpack(x);
        let n = self.omega.len();
        let mut r = DVector::zeros(2 * n);
        for (k, &w) in self.omega.iter().enumerate() {
            let e = m.eval_complex(Complex64::new(w, 0.0));
            r[k] = (e.re.abs() + LOG_FLOOR).ln() - self.ln_re[k];
            r[n + k] = (e.im.abs() + LOG_FLOOR).ln() - self.ln_im[k];
            // fitting |eps'| alone lets the model flip sign unnoticed;
            // penalize a sign mismatch where the data is clearly nonzero
            if e.re.signum() != self.sign_re[k] && self.ln_re[k] > LOG_FLOOR.ln() + 2.0 {
                r[k] += 2.0;
            }
        }
        r
    }

    /// Analytic Jacobian of the log-residuals.
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.unpack(x);
        let n = self.omega.len();
        let np = x.len();
        let mut jac = DMatrix::zeros(2 * n, np);
        for (k, &w) in self.omega.iter().enumerate() {
            let iw = Complex64::new(0.0, w);
            let e = m.eval_complex(Complex64::new(w, 0.0));
            let dre = e.re.signum() / (e.re.abs() + LOG_FLOOR);
            let dim = e.im.signum() / (e.im.abs() + LOG_FLOOR);
            let mut put = |col: usize, de: Complex64| {
                jac[(k, col)] = dre * de.re;
                jac[(n + k, col)] = dim * de.im;
            };
            // d/d ln(omega_p): Drude part scales as omega_p^2
            let den_d = Complex64::new(w * w, w / m.tau_d);
            if m.omega_p > 0.0 {
                let eps_d = -m.omega_p * m.omega_p / den_d;
                put(0, 2.0 * eps_d);
                // d/d ln(tau)
                let dtau = -Complex64::new(0.0, w) * m.omega_p * m.omega_p
                    / (m.tau_d * den_d * den_d);
                put(1, dtau);
            }
            for (j, o) in m.oscillators.iter().enumerate() {
                let wj = o.omega;
                let f = o.strength / (wj * wj);
                let g = o.gamma / wj;
                let den = Complex64::new(wj * wj - w * w, -w * o.gamma);
                // d/df
                put(3 + 3 * j, wj * wj / den);
                // d/dg: dD/dg = -i w wj
                put(4 + 3 * j, f * wj * wj * iw * wj / (den * den));
                // d/d ln(wj): strength and damping ride along with wj
                // eps_j = f wj^2 / (wj^2 - i w g wj - w^2)
                let ddenom_dwj = Complex64::new(2.0 * wj, -w * g);
                let de_dwj =
                    2.0 * f * wj / den - f * wj * wj * ddenom_dwj / (den * den);
                put(2 + 3 * j, de_dwj * wj);
            }
        }
        jac
    }
}

fn default_initial(spectrum: &TabulatedSpectrum, n_osc: usize) -> DrudeLorentzModel {
    let pts = spectrum.points();
    let (w_lo, w_hi) = spectrum.omega_range();
    let tau0 = 1.5e-14;
    // Drude asymptote eps'' ~ wp^2 tau / w at the low end
    let omega_p = (pts[0].eps_imag.max(0.0) * pts[0].omega / tau0)
        .sqrt()
        .max(1e12);
    let oscillators = (0..n_osc)
        .map(|j| {
            let frac = (j as f64 + 0.5) / n_osc as f64;
            let w = w_lo * (w_hi / w_lo).powf(frac) * 0.5;
            OscillatorTerm {
                omega: w,
                strength: 0.5 * w * w,
                gamma: 0.3 * w,
            }
        })
        .collect();
    DrudeLorentzModel {
        omega_p,
        tau_d: tau0,
        oscillators,
    }
}

/// Fit a model with `n_oscillators` oscillator terms to the spectrum.
///
/// Returns the best model found along with its report; `converged = false`
/// flags a best-effort result after the iteration budget ran out.
pub fn fit_model(
    spectrum: &TabulatedSpectrum,
    n_oscillators: usize,
    initial: Option<DrudeLorentzModel>,
    options: &FitOptions,
) -> Result<(DrudeLorentzModel, FitReport), DielectricError> {
    let needed = 3 * (2 + 3 * n_oscillators);
    if spectrum.len() < needed {
        return Err(DielectricError::Spectrum(format!(
            "fit with {n_oscillators} oscillators needs at least {needed} points, got {}",
            spectrum.len()
        )));
    }
    let problem = Problem::new(spectrum, n_oscillators);
    let x0 = Problem::pack(&initial.unwrap_or_else(|| default_initial(spectrum, n_oscillators)));

    let starts: Vec<Vec<f64>> = std::iter::once(x0.clone())
        .chain((0..options.multi_starts).map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ (k as u64 + 1));
            x0.iter()
                .enumerate()
                .map(|(i, &v)| {
                    if i < 2 || (i - 2) % 3 == 0 {
                        // log-parameters: additive noise is multiplicative
                        v + rng.gen_range(-0.15..0.15)
                    } else {
                        v * (1.0 + rng.gen_range(-0.25..0.25)) + rng.gen_range(-0.01..0.01)
                    }
                })
                .collect()
        }))
        .collect();

    let lm_opts = LmOptions {
        max_iter: options.max_iterations,
        ..LmOptions::default()
    };
    let results: Vec<_> = starts
        .par_iter()
        .map(|s| {
            let r = |x: &[f64]| problem.residuals(x);
            let j = |x: &[f64]| problem.jacobian(x);
            levenberg_marquardt(&r, Some(&j), s, &lm_opts)
        })
        .collect();

    let (best_x, best_rep) = results
        .into_iter()
        .min_by(|a, b| a.1.residual_norm.partial_cmp(&b.1.residual_norm).unwrap())
        .unwrap();
    let model = problem.unpack(&best_x);
    let (w_lo, _) = spectrum.omega_range();
    let report = FitReport {
        residual_norm: best_rep.residual_norm,
        iterations: best_rep.iterations,
        converged: best_rep.converged,
        n_starts: starts.len(),
        boundary_omega_p: model.omega_p < 1e-3 * w_lo,
        weighting: "equal weights on log eps' and log eps''".into(),
    };
    Ok((model, report))
}

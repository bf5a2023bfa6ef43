//! Finite-temperature Lifshitz force gradient between a sphere and a plate
//! in the proximity force approximation.
//!
//! The gradient equals `2 pi R` times the parallel-plate Lifshitz pressure.
//! Each Matsubara term is evaluated in the substituted variable
//! `y = 2 a p xi_n / c`:
//!
//! ```text
//! dF/da = (R kB T / 4 a^3) sum'_n I(xi_n)
//! I(xi) = int_{y0}^inf y^2 sum_pol [ e^y / (r1 r2) - 1 ]^-1 dy,   y0 = 2 a xi/c
//! ```
//!
//! with the wall reflection coefficients evaluated at `p = y/y0` and the
//! primed sum giving the `n = 0` term half weight. The `n = 0` integrand
//! uses the analytic `xi -> 0` limits of the reflection coefficients
//! (conductors: r_TM -> 1; dielectrics: (eps0-1)/(eps0+1); r_TE -> 0 for
//! every non-magnetic material), never a floating-point division by the
//! vanishing frequency. Attractive gradients are reported positive.
//!
//! Reflection coefficients follow
//!
//! ```text
//! r_TM(m, m') = (eps_m kap_m' - eps_m' kap_m)/(eps_m kap_m' + eps_m' kap_m)
//! r_TE(m, m') = (kap_m' - kap_m)/(kap_m' + kap_m),  kap = sqrt(p^2 - 1 + eps)
//! ```
//!
//! The wall coefficient seen from the gap is obtained with the material in
//! the first slot, `r = fresnel_*(p, eps_material, 1)`, which tends to +1
//! (TM) and -1 (TE) in the conductor limit; the two-wall products entering
//! the sum are then positive for like materials.

pub mod layered;
pub mod source;

pub use layered::{layered_reflection, Polarization};
pub use source::DielectricSource;

use crate::constants::{C, HBAR, K_B};
use crate::math::quad::gauss24_panels;
use crate::math::stats::pairwise_sum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LifshitzError {
    #[error("separation a = {a:.3e} m outside the validated range [1e-8, 1e-5] m")]
    SeparationOutOfRange { a: f64 },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("dielectric response eps(i xi) = {eps:.6} <= 1 at xi = {xi:.6e} s^-1")]
    InvalidResponse { xi: f64, eps: f64 },
    #[error("Matsubara sum not converged after {n_terms} terms: partial sum {partial:.6e} N/m, tail estimate {tail_estimate:.3e} N/m")]
    ConvergenceFailure {
        partial: f64,
        tail_estimate: f64,
        n_terms: usize,
    },
    #[error(transparent)]
    Dielectric(#[from] crate::dielectric::DielectricError),
}

/// `kappa(p, eps) = sqrt(p^2 - 1 + eps)`.
pub fn kappa(p: f64, eps: f64) -> f64 {
    debug_assert!(p >= 1.0 && eps >= 0.0);
    (p * p - 1.0 + eps).sqrt()
}

/// TM (p-polarized) reflection coefficient between media `m` and `m'`.
pub fn fresnel_tm(p: f64, eps_m: f64, eps_mp: f64) -> f64 {
    if eps_m.is_infinite() {
        return 1.0;
    }
    if eps_mp.is_infinite() {
        return -1.0;
    }
    let km = kappa(p, eps_m);
    let kmp = kappa(p, eps_mp);
    (eps_m * kmp - eps_mp * km) / (eps_m * kmp + eps_mp * km)
}

/// TE (s-polarized) reflection coefficient with mu = 1 on both sides.
pub fn fresnel_te(p: f64, eps_m: f64, eps_mp: f64) -> f64 {
    if eps_m.is_infinite() {
        return -1.0;
    }
    if eps_mp.is_infinite() {
        return 1.0;
    }
    let km = kappa(p, eps_m);
    let kmp = kappa(p, eps_mp);
    (kmp - km) / (kmp + km)
}

/// Both wall coefficients for a gap wave reflecting off a medium with the
/// given permittivity.
fn wall_coefficients(p: f64, eps: f64) -> (f64, f64) {
    (fresnel_tm(p, eps, 1.0), fresnel_te(p, eps, 1.0))
}

/// Media on either side of the vacuum gap (index 2); the gap permittivity
/// is fixed at 1 and all media are non-magnetic.
#[derive(Debug, Clone)]
pub struct MaterialAssignment {
    /// Plate (index m = 1).
    pub plate: DielectricSource,
    /// Sphere (index m = 3).
    pub sphere: DielectricSource,
}

impl MaterialAssignment {
    pub fn new(plate: DielectricSource, sphere: DielectricSource) -> Self {
        Self { plate, sphere }
    }

    /// Same response on both surfaces.
    pub fn symmetric(source: DielectricSource) -> Self {
        Self {
            plate: source.clone(),
            sphere: source,
        }
    }

    pub fn validate(&self, xi_lo: f64, xi_hi: f64) -> Result<(), LifshitzError> {
        self.plate.validate_range(xi_lo, xi_hi)?;
        self.sphere.validate_range(xi_lo, xi_hi)
    }
}

/// Evaluation controls for the gradient.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LifshitzConfig {
    /// Temperature [K].
    pub temperature: f64,
    /// Sphere radius [m].
    pub sphere_radius: f64,
    /// Stop when the last ten Matsubara terms contribute less than this
    /// relative fraction of the running sum.
    pub matsubara_rel_tol: f64,
    /// Relative tolerance of the per-term p-integration.
    pub quadrature_tol: f64,
    /// Hard cap on the number of Matsubara terms.
    pub max_matsubara: usize,
}

impl Default for LifshitzConfig {
    fn default() -> Self {
        Self {
            temperature: 296.0,
            sphere_radius: 77.9e-6,
            matsubara_rel_tol: 1e-8,
            quadrature_tol: 1e-9,
            max_matsubara: 20_000,
        }
    }
}

impl LifshitzConfig {
    pub fn validate(&self) -> Result<(), LifshitzError> {
        if !(self.temperature > 0.0) {
            return Err(LifshitzError::InvalidConfig(
                "temperature must be > 0".into(),
            ));
        }
        if !(self.sphere_radius > 0.0) {
            return Err(LifshitzError::InvalidConfig(
                "sphere_radius must be > 0".into(),
            ));
        }
        for (name, v) in [
            ("matsubara_rel_tol", self.matsubara_rel_tol),
            ("quadrature_tol", self.quadrature_tol),
        ] {
            if !(v > 0.0 && v <= 1e-2) {
                return Err(LifshitzError::InvalidConfig(format!(
                    "{name} must lie in (0, 1e-2], got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Matsubara frequencies `xi_n = 2 pi kB T n / hbar`, `n = 0..=n_max`.
#[derive(Debug, Clone)]
pub struct MatsubaraGrid {
    pub xi: Vec<f64>,
}

impl MatsubaraGrid {
    pub fn new(temperature: f64, n_max: usize) -> Self {
        let step = crate::constants::matsubara_spacing(temperature);
        Self {
            xi: (0..=n_max).map(|n| n as f64 * step).collect(),
        }
    }
}

/// Force gradient with its convergence diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Gradient {
    /// d(F)/d(a) [N/m], attractive reported positive.
    pub value: f64,
    /// Truncation estimate relative to the value.
    pub rel_err: f64,
    /// Matsubara terms evaluated (excluding n = 0).
    pub n_terms: usize,
}

/// Stable evaluation of `[e^y / rho - 1]^-1 = rho e^-y / (1 - rho e^-y)`.
#[inline]
fn pol_term(rho: f64, exp_neg_y: f64) -> f64 {
    let t = rho * exp_neg_y;
    t / (1.0 - t)
}

/// Reduced integrand `I(xi)` for one Matsubara frequency.
fn term_integral(y0: f64, eps_plate: f64, eps_sphere: f64, quad_tol: f64) -> f64 {
    if y0 > 700.0 {
        return 0.0; // e^-y0 underflows; the term is identically zero
    }
    let f = |y: f64| {
        if y == 0.0 {
            return 0.0;
        }
        let p = if y0 > 0.0 { y / y0 } else { 1.0 };
        let (r1_tm, r1_te) = wall_coefficients(p, eps_plate);
        let (r2_tm, r2_te) = wall_coefficients(p, eps_sphere);
        let e = (-y).exp();
        y * y * (pol_term(r1_tm * r2_tm, e) + pol_term(r1_te * r2_te, e))
    };
    integrate_to_tol(&f, y0, y0 + 60.0, quad_tol)
}

/// n = 0 integrand with the static wall coefficients.
fn term_integral_static(walls: ((f64, f64), (f64, f64)), quad_tol: f64) -> f64 {
    let ((r1_tm, r1_te), (r2_tm, r2_te)) = walls;
    let rho_tm = r1_tm * r2_tm;
    let rho_te = r1_te * r2_te;
    let f = |y: f64| {
        if y == 0.0 {
            return 0.0;
        }
        let e = (-y).exp();
        y * y * (pol_term(rho_tm, e) + pol_term(rho_te, e))
    };
    integrate_to_tol(&f, 0.0, 60.0, quad_tol)
}

/// Panel-doubling Gauss integration until the relative change drops below
/// the tolerance.
fn integrate_to_tol(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut n = 6;
    let mut prev = gauss24_panels(f, a, b, n);
    for _ in 0..4 {
        n *= 2;
        let next = gauss24_panels(f, a, b, n);
        let scale = next.abs().max(1e-300);
        if (next - prev).abs() <= rel_tol * scale {
            return next;
        }
        prev = next;
    }
    prev
}

/// Per-term physical contributions `t_n = (R kB T / 4 a^3) I(xi_n)` [N/m].
///
/// The `n = 0` entry is stored at full weight; the gradient is
/// `0.5 t_0 + sum_{n>=1} t_n`. Exposed so the primed-sum bookkeeping is
/// testable and the truncation logic auditable.
pub fn matsubara_terms(
    a: f64,
    materials: &MaterialAssignment,
    config: &LifshitzConfig,
) -> Result<Vec<f64>, LifshitzError> {
    check_separation(a)?;
    config.validate()?;
    let prefactor = config.sphere_radius * K_B * config.temperature / (4.0 * a * a * a);
    let xi_step = crate::constants::matsubara_spacing(config.temperature);
    let walls = (
        materials.plate.wall_static(),
        materials.sphere.wall_static(),
    );
    let mut terms = vec![prefactor * term_integral_static(walls, config.quadrature_tol)];

    const BLOCK: usize = 64;
    let mut n_start = 1usize;
    loop {
        let n_end = (n_start + BLOCK - 1).min(config.max_matsubara);
        let block: Result<Vec<f64>, LifshitzError> = (n_start..=n_end)
            .into_par_iter()
            .map(|n| {
                let xi = n as f64 * xi_step;
                let e1 = materials.plate.eps_iw(xi)?;
                let e3 = materials.sphere.eps_iw(xi)?;
                let y0 = 2.0 * a * xi / C;
                Ok(prefactor * term_integral(y0, e1, e3, config.quadrature_tol))
            })
            .collect();
        terms.extend(block?);

        // primed-sum running total for the truncation check
        let total = 0.5 * terms[0] + pairwise_sum(&terms[1..]);
        let tail: f64 = terms[terms.len().saturating_sub(10)..].iter().sum();
        if terms.len() > 11 && tail.abs() <= config.matsubara_rel_tol * total.abs() {
            return Ok(terms);
        }
        if n_end >= config.max_matsubara {
            let last = *terms.last().unwrap();
            let prev = terms[terms.len() - 2];
            let ratio = if prev != 0.0 {
                (last / prev).abs().min(0.999)
            } else {
                0.0
            };
            return Err(LifshitzError::ConvergenceFailure {
                partial: total,
                tail_estimate: last * ratio / (1.0 - ratio),
                n_terms: terms.len() - 1,
            });
        }
        n_start = n_end + 1;
    }
}

fn check_separation(a: f64) -> Result<(), LifshitzError> {
    if !(1e-8..=1e-5).contains(&a) {
        return Err(LifshitzError::SeparationOutOfRange { a });
    }
    Ok(())
}

/// Casimir force gradient at separation `a` [N/m], attractive positive.
pub fn gradient_pfa(
    a: f64,
    materials: &MaterialAssignment,
    config: &LifshitzConfig,
) -> Result<Gradient, LifshitzError> {
    let terms = matsubara_terms(a, materials, config)?;
    let mut weighted = terms.clone();
    weighted[0] *= 0.5;
    let value = pairwise_sum(&weighted);
    let tail: f64 = terms[terms.len().saturating_sub(10)..].iter().sum();
    let rel_err = if value != 0.0 {
        (tail / value).abs().max(config.quadrature_tol)
    } else {
        0.0
    };
    Ok(Gradient {
        value,
        rel_err,
        n_terms: terms.len() - 1,
    })
}

/// Zero-temperature extrapolation: the Matsubara sum becomes
/// `(hbar / 2 pi) int_0^inf I(xi) dxi`.
pub fn gradient_pfa_zero_t(
    a: f64,
    materials: &MaterialAssignment,
    config: &LifshitzConfig,
) -> Result<Gradient, LifshitzError> {
    check_separation(a)?;
    let scale = C / (2.0 * a); // xi = scale * s, so that y0 = s
    let prefactor =
        config.sphere_radius / (4.0 * a * a * a) * HBAR / (2.0 * std::f64::consts::PI);
    // I(s) sampled on Gauss nodes; s = 0 is never a node so the static
    // limit is not needed here
    let err = std::cell::Cell::new(None);
    let f = |s: f64| {
        let xi = scale * s;
        match (materials.plate.eps_iw(xi), materials.sphere.eps_iw(xi)) {
            (Ok(e1), Ok(e3)) => term_integral(s, e1, e3, config.quadrature_tol),
            _ => {
                err.set(Some(xi));
                0.0
            }
        }
    };
    let integral = gauss24_panels(f, 0.0, 60.0, 12);
    if let Some(xi) = err.get() {
        return Err(LifshitzError::InvalidConfig(format!(
            "response evaluation failed at xi = {xi:.3e} in the zero-T integral"
        )));
    }
    Ok(Gradient {
        value: prefactor * scale * integral,
        rel_err: config.quadrature_tol,
        n_terms: 0,
    })
}

/// Relative difference curve between two material stacks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionCurve {
    pub a: Vec<f64>,
    /// `delta(a) = grad_B(a)/grad_A(a) - 1`.
    pub delta: Vec<f64>,
    /// Mean of `delta` over the window (unit weights; a pure theory curve
    /// carries no per-point uncertainty).
    pub window_mean: f64,
    pub window: (f64, f64),
}

/// Default averaging window [m].
pub const DEFAULT_WINDOW: (f64, f64) = (80e-9, 120e-9);

/// Compute `grad_B/grad_A - 1` on a separation grid plus its window mean.
pub fn reduction_curve(
    a_grid: &[f64],
    materials_a: &MaterialAssignment,
    materials_b: &MaterialAssignment,
    config: &LifshitzConfig,
    window: (f64, f64),
) -> Result<ReductionCurve, LifshitzError> {
    let mut delta = Vec::with_capacity(a_grid.len());
    for &a in a_grid {
        let ga = gradient_pfa(a, materials_a, config)?;
        let gb = gradient_pfa(a, materials_b, config)?;
        delta.push(gb.value / ga.value - 1.0);
    }
    let in_window: Vec<f64> = a_grid
        .iter()
        .zip(&delta)
        .filter(|(a, _)| **a >= window.0 && **a <= window.1)
        .map(|(_, d)| *d)
        .collect();
    let window_mean = if in_window.is_empty() {
        f64::NAN
    } else {
        crate::math::stats::mean(&in_window)
    };
    Ok(ReductionCurve {
        a: a_grid.to_vec(),
        delta,
        window_mean,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kappa_hand_values() {
        assert_eq!(kappa(1.0, 1.0), 1.0);
        assert_eq!(kappa(2.0, 1.0), 2.0);
        assert_relative_eq!(kappa(1.5, 4.0), 2.291_287_847_477_92, max_relative = 1e-12);
    }

    #[test]
    fn fresnel_identical_media_do_not_reflect() {
        for p in [1.0, 1.7, 12.0] {
            assert_eq!(fresnel_tm(p, 3.0, 3.0), 0.0);
            assert_eq!(fresnel_te(p, 3.0, 3.0), 0.0);
        }
    }

    #[test]
    fn fresnel_hand_value_at_p1() {
        // direct formula arithmetic: kap(1,1)=1, kap(1,4)=2
        assert_relative_eq!(fresnel_tm(1.0, 1.0, 4.0), -1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(fresnel_te(1.0, 1.0, 4.0), 1.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn conductor_limit_of_wall_reflectivity() {
        // a gap wave reflecting off an increasingly conductive wall:
        // material in the first slot, r_TM -> +1
        for p in [1.0, 2.0, 8.0] {
            // finite-eps convergence is ~ 2p/sqrt(eps)
            let r = fresnel_tm(p, 1e12, 1.0);
            assert!((r - 1.0).abs() < 5e-5, "p={p}: {r}");
            let rte = fresnel_te(p, 1e12, 1.0);
            assert!((rte + 1.0).abs() < 5e-5, "p={p}: {rte}");
        }
        assert_eq!(fresnel_tm(1.5, f64::INFINITY, 1.0), 1.0);
        assert_eq!(fresnel_te(1.5, f64::INFINITY, 1.0), -1.0);
    }

    #[test]
    fn ideal_conductor_zero_t_matches_casimir_formula() {
        // 2 pi R * pi^2 hbar c / (240 a^4)
        let config = LifshitzConfig::default();
        let mats = MaterialAssignment::symmetric(DielectricSource::PerfectConductor);
        let a = 100e-9;
        let g = gradient_pfa_zero_t(a, &mats, &config).unwrap();
        let exact = 2.0 * std::f64::consts::PI * config.sphere_radius
            * std::f64::consts::PI.powi(2)
            * crate::constants::HBAR
            * crate::constants::C
            / (240.0 * a.powi(4));
        assert_relative_eq!(g.value, exact, max_relative = 1e-6);
    }

    #[test]
    fn vacuum_on_either_side_gives_zero() {
        let config = LifshitzConfig::default();
        let mats = MaterialAssignment::symmetric(DielectricSource::Vacuum);
        let g = gradient_pfa(100e-9, &mats, &config).unwrap();
        assert_eq!(g.value, 0.0);
    }

    #[test]
    fn gradient_decreases_with_separation_and_scales_with_radius() {
        let config = LifshitzConfig::default();
        let mats = MaterialAssignment::symmetric(DielectricSource::Constant(10.0));
        let g1 = gradient_pfa(50e-9, &mats, &config).unwrap().value;
        let g2 = gradient_pfa(100e-9, &mats, &config).unwrap().value;
        let g3 = gradient_pfa(200e-9, &mats, &config).unwrap().value;
        assert!(g1 > g2 && g2 > g3 && g3 > 0.0);

        let mut config2 = config.clone();
        config2.sphere_radius *= 2.0;
        let g2r = gradient_pfa(100e-9, &mats, &config2).unwrap().value;
        assert_eq!(g2r, 2.0 * g2); // exact PFA proportionality in R
    }

    #[test]
    fn primed_sum_bookkeeping() {
        let config = LifshitzConfig::default();
        let mats = MaterialAssignment::symmetric(DielectricSource::Constant(5.0));
        let terms = matsubara_terms(150e-9, &mats, &config).unwrap();
        let with_half = {
            let mut t = terms.clone();
            t[0] *= 0.5;
            pairwise_sum(&t)
        };
        let without = pairwise_sum(&terms[1..]);
        let diff = with_half - without;
        assert_relative_eq!(diff, 0.5 * terms[0], max_relative = 1e-12);
    }

    #[test]
    fn separation_range_is_enforced() {
        let config = LifshitzConfig::default();
        let mats = MaterialAssignment::symmetric(DielectricSource::Vacuum);
        assert!(matches!(
            gradient_pfa(5e-9, &mats, &config),
            Err(LifshitzError::SeparationOutOfRange { .. })
        ));
        assert!(matches!(
            gradient_pfa(2e-5, &mats, &config),
            Err(LifshitzError::SeparationOutOfRange { .. })
        ));
    }

    #[test]
    fn identical_stacks_reduce_to_zero() {
        let config = LifshitzConfig::default();
        let mats = MaterialAssignment::symmetric(DielectricSource::Constant(4.0));
        let grid = [80e-9, 100e-9, 120e-9];
        let r = reduction_curve(&grid, &mats, &mats, &config, DEFAULT_WINDOW).unwrap();
        assert!(r.delta.iter().all(|d| *d == 0.0));
        assert_eq!(r.window_mean, 0.0);
    }

    #[test]
    fn truncation_failure_carries_partial_sum() {
        let config = LifshitzConfig {
            max_matsubara: 12,
            ..LifshitzConfig::default()
        };
        let mats = MaterialAssignment::symmetric(DielectricSource::Constant(1000.0));
        match gradient_pfa(100e-9, &mats, &config) {
            Err(LifshitzError::ConvergenceFailure {
                partial, n_terms, ..
            }) => {
                assert!(partial > 0.0);
                assert_eq!(n_terms, 12);
            }
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }
}

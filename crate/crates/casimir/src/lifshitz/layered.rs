//! Two-interface (gap / film / substrate) reflection for thin-film
//! what-if studies.

use super::{fresnel_te, fresnel_tm, kappa};
use crate::constants::C;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    Tm,
    Te,
}

/// Effective reflection coefficient of a film of thickness `d` on a
/// substrate, seen from the vacuum gap at imaginary frequency `xi`:
///
/// ```text
/// r = (r12 + r23 e^(-2 kap2 d xi / c)) / (1 + r12 r23 e^(-2 kap2 d xi / c))
/// ```
///
/// `d = 0` reduces exactly to the bare substrate coefficient and
/// `d -> inf` to the bare film coefficient.
pub fn layered_reflection(
    film_eps: f64,
    substrate_eps: f64,
    thickness: f64,
    p: f64,
    xi: f64,
    pol: Polarization,
) -> f64 {
    debug_assert!(thickness >= 0.0);
    let (r12, r23) = match pol {
        Polarization::Tm => (
            fresnel_tm(p, film_eps, 1.0),
            fresnel_tm(p, substrate_eps, film_eps),
        ),
        Polarization::Te => (
            fresnel_te(p, film_eps, 1.0),
            fresnel_te(p, substrate_eps, film_eps),
        ),
    };
    let damp = (-2.0 * kappa(p, film_eps) * thickness * xi / C).exp();
    (r12 + r23 * damp) / (1.0 + r12 * r23 * damp)
}

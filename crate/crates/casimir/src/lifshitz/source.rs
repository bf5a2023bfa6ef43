//! Imaginary-axis dielectric response sources consumed by the Lifshitz sum.

use super::LifshitzError;
use crate::dielectric::materials::BundledMaterial;
use crate::dielectric::{eval_imag_axis, DrudeLorentzModel, KkContinuation, StaticLimit};
use std::sync::Arc;

/// Where a medium's `eps(i xi)` comes from.
///
/// `Model` evaluates the closed-form continuation of the fitted model and
/// is appropriate for passive parameter sets. `ModelKk` routes through the
/// Kramers–Kronig transform of the model's real-axis loss, which is the
/// path used for the bundled tables (their negative-damping rows make the
/// closed form singular on the imaginary axis). `Table` wraps a
/// continuation built from measured spectra.
#[derive(Debug, Clone)]
pub enum DielectricSource {
    /// eps = 1 at all frequencies.
    Vacuum,
    /// Ideal-conductor stub: r_TM = 1, r_TE = -1 at all frequencies.
    PerfectConductor,
    /// Frequency-independent permittivity.
    Constant(f64),
    /// Closed-form continuation of a Drude–Lorentz model.
    Model(Arc<DrudeLorentzModel>),
    /// Kramers–Kronig continuation of a model's real-axis loss.
    ModelKk {
        model: Arc<DrudeLorentzModel>,
        continuation: Arc<KkContinuation>,
    },
    /// Tabulated continuation (e.g. from measured, merged spectra).
    Table {
        continuation: Arc<KkContinuation>,
        static_limit: StaticLimit,
    },
}

impl DielectricSource {
    /// Bundled material: model + validated KK continuation.
    pub fn bundled(mat: &BundledMaterial) -> Self {
        Self::ModelKk {
            model: Arc::new(mat.model.clone()),
            continuation: Arc::new(mat.continuation.clone()),
        }
    }

    /// KK-continued response of an arbitrary model.
    pub fn model_kk(model: DrudeLorentzModel) -> Self {
        let continuation = Arc::new(KkContinuation::of_model(&model));
        Self::ModelKk {
            model: Arc::new(model),
            continuation,
        }
    }

    /// Closed-form continuation of a model (passive parameter sets).
    pub fn model_direct(model: DrudeLorentzModel) -> Self {
        Self::Model(Arc::new(model))
    }

    /// `eps(i xi)` for `xi > 0`.
    pub fn eps_iw(&self, xi: f64) -> Result<f64, LifshitzError> {
        debug_assert!(xi > 0.0);
        match self {
            Self::Vacuum => Ok(1.0),
            Self::PerfectConductor => Ok(f64::INFINITY),
            Self::Constant(e) => Ok(*e),
            Self::Model(m) => Ok(eval_imag_axis(m, xi)),
            Self::ModelKk { continuation, .. } | Self::Table { continuation, .. } => {
                continuation.eval(xi).map_err(LifshitzError::Dielectric)
            }
        }
    }

    /// Static wall reflection coefficients `(r_TM, r_TE)` in the xi -> 0
    /// limit: 1 for conductors, `(eps0-1)/(eps0+1)` for dielectrics, with
    /// the TE coefficient vanishing for every non-magnetic material except
    /// the ideal-conductor stub.
    pub fn wall_static(&self) -> (f64, f64) {
        match self {
            Self::Vacuum => (0.0, 0.0),
            Self::PerfectConductor => (1.0, -1.0),
            Self::Constant(e) => ((e - 1.0) / (e + 1.0), 0.0),
            Self::Model(m) => match m.static_limit() {
                StaticLimit::Conductor => (1.0, 0.0),
                StaticLimit::Dielectric(e0) => ((e0 - 1.0) / (e0 + 1.0), 0.0),
            },
            Self::ModelKk { model, .. } => match model.static_limit() {
                StaticLimit::Conductor => (1.0, 0.0),
                StaticLimit::Dielectric(e0) => ((e0 - 1.0) / (e0 + 1.0), 0.0),
            },
            Self::Table { static_limit, .. } => match static_limit {
                StaticLimit::Conductor => (1.0, 0.0),
                StaticLimit::Dielectric(e0) => ((e0 - 1.0) / (e0 + 1.0), 0.0),
            },
        }
    }

    /// Check `eps(i xi) > 1` on a log grid over `[lo, hi]`; names the first
    /// offending frequency. Vacuum is exempt (eps = 1 exactly).
    pub fn validate_range(&self, lo: f64, hi: f64) -> Result<(), LifshitzError> {
        if matches!(self, Self::Vacuum | Self::PerfectConductor) {
            return Ok(());
        }
        let n = 200;
        for i in 0..n {
            let xi = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
            let eps = self.eps_iw(xi)?;
            if !(eps > 1.0) {
                return Err(LifshitzError::InvalidResponse { xi, eps });
            }
        }
        Ok(())
    }
}

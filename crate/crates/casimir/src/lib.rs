//! Casimir force gradients between a gold sphere and coated plates.
//!
//! The crate covers the full chain from measured or fitted dielectric
//! spectra to corrected force-gradient curves:
//!
//! * [`dielectric`] — Drude–Lorentz models, ellipsometry conversion,
//!   Kramers–Kronig continuation to the imaginary frequency axis, and
//!   least-squares model fitting.
//! * [`lifshitz`] — finite-temperature Lifshitz force gradient between a
//!   sphere and a plate in the proximity force approximation.
//! * [`surfaces`] — Monte-Carlo roughness and electrostatic-patch
//!   corrections from gridded AFM/KPFM maps.
//! * [`instrument`] — lumped-parameter model of the sphere-on-cantilever
//!   AFM in air: frequency-shift conversion, electrostatic calibration,
//!   squeeze-film damping, transfer functions, and a sweep simulator.
//! * [`analysis`] — the data-handling chain turning raw sweep records into
//!   averaged gradient curves and relative reductions with propagated
//!   errors.
//! * [`cli`] — command implementations behind the `casimir` binary.
//!
//! All quantities are strict SI unless a name says otherwise; angular
//! frequencies are rad/s.

pub mod analysis;
pub mod cli;
pub mod constants;
pub mod dielectric;
pub mod instrument;
pub mod lifshitz;
pub mod math;
pub mod records;
pub mod surfaces;

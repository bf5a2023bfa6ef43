//! Sweep simulator: closes the loop for the analysis chain by generating
//! records with a known gradient law, electrostatic excitations, drifting
//! calibrations, and configurable noise.

use super::electrostatics::electrostatic_gradient;
use super::shift::shift_from_gradient;
use super::{CantileverParams, InstrumentError};
use crate::math::randn;
use crate::records::{SweepPoint, SweepRecord, RECORD_VERSION};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Geometry and excitation plan of one sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPlan {
    /// Logarithmically spaced separations from `a_start` down to `a_end`.
    pub n_points: usize,
    pub a_start: f64,
    pub a_end: f64,
    /// Time per point [s].
    pub dwell: f64,
    /// Sphere radius [m].
    pub radius: f64,
    /// Excitation voltage at the reference separation; the feedback keeps
    /// the signal constant, so `V(a) = v_ref * a / a_ref`.
    pub v_ex_ref: f64,
    pub v_ac_ref: f64,
    pub a_ref: f64,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            n_points: 34,
            a_start: 500e-9,
            a_end: 70e-9,
            dwell: 3.0,
            radius: 77.9e-6,
            v_ex_ref: 0.1,
            v_ac_ref: 0.06,
            a_ref: 500e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseModel {
    /// White frequency noise per point [rad/s].
    pub freq_noise_rms: f64,
    /// Voltage readout noise [V].
    pub v_noise_rms: f64,
    /// Full span of the slow resonance drift over the run [rad/s]
    /// (bounded random walk; 2 pi * 0.08 covers the observed 80 mHz).
    pub omega0_drift_span: f64,
    /// Calibration error of the per-sweep omega0 determination [rad/s].
    pub omega0_cal_sigma: f64,
    /// Systematic offset drift per sweep [m].
    pub a0_drift_per_sweep: f64,
    /// Random offset jitter between sweeps [m].
    pub a0_jitter_rms: f64,
}

impl NoiseModel {
    pub fn quiet() -> Self {
        Self {
            freq_noise_rms: 0.0,
            v_noise_rms: 0.0,
            omega0_drift_span: 0.0,
            omega0_cal_sigma: 0.0,
            a0_drift_per_sweep: 0.0,
            a0_jitter_rms: 0.0,
        }
    }

    /// Noise sized so the propagated statistical budget at 100 nm lands
    /// near the instrument's 116 uN/m.
    pub fn realistic() -> Self {
        Self {
            freq_noise_rms: 0.8,
            v_noise_rms: 2e-4,
            omega0_drift_span: 2.0 * std::f64::consts::PI * 0.08,
            omega0_cal_sigma: 5e-3,
            a0_drift_per_sweep: 0.0,
            a0_jitter_rms: 0.3e-9,
        }
    }
}

/// A whole measurement run: many sweeps with drifting calibrations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunPlan {
    pub sweep: SweepPlan,
    pub n_sweeps: usize,
    /// True offset between piezo readout and separation at run start [m].
    pub a0_initial: f64,
    /// Override the per-sweep true offsets (testing hook for planted
    /// jumps); lengths must match `n_sweeps` when present.
    pub a0_schedule: Option<Vec<f64>>,
}

impl Default for RunPlan {
    fn default() -> Self {
        Self {
            sweep: SweepPlan::default(),
            n_sweeps: 35,
            a0_initial: 70e-9,
            a0_schedule: None,
        }
    }
}

/// Simulate one sweep with a known offset trajectory and resonance.
///
/// The true offset drifts continuously in time: `a0(t) = a0_center +
/// a0_rate (t - t_center)`, anchored at the sweep's center point exactly
/// the way the downstream interpolation assumes. The piezo is commanded
/// from the nominal grid, so the actual separation of each point carries
/// the instantaneous drift. The recorded shift is relative to the sweep's
/// calibrated omega0, so an imperfect calibration shows up exactly the way
/// it does in the instrument. Pull-in truncates the record and flags it.
#[allow(clippy::too_many_arguments)]
pub fn simulate_sweep(
    gradient_law: &dyn Fn(f64) -> f64,
    params: &CantileverParams,
    plan: &SweepPlan,
    noise: &NoiseModel,
    seed: u64,
    index: usize,
    t_start: f64,
    a0_center: f64,
    a0_rate: f64,
    omega0_true: f64,
) -> Result<SweepRecord, InstrumentError> {
    if plan.n_points < 2 || !(plan.a_start > plan.a_end) {
        return Err(InstrumentError::InvalidParameter(
            "sweep plan needs n_points >= 2 and a_start > a_end".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let omega0_cal = omega0_true + noise.omega0_cal_sigma * randn(&mut rng);

    let center_idx = if plan.n_points >= 16 {
        15
    } else {
        plan.n_points / 2
    };
    let t_center = t_start + center_idx as f64 * plan.dwell;
    let ratio = (plan.a_end / plan.a_start).powf(1.0 / (plan.n_points - 1) as f64);
    let mut points = Vec::with_capacity(plan.n_points);
    let mut truncated = false;
    for i in 0..plan.n_points {
        let a_nominal = plan.a_start * ratio.powi(i as i32);
        let t = t_start + i as f64 * plan.dwell;
        let a0_t = a0_center + a0_rate * (t - t_center);
        // piezo commanded against the center-point offset; the actual
        // separation picks up the in-sweep drift
        let a_pz = a0_center - a_nominal;
        let a = a0_t - a_pz;
        // feedback holds the electrostatic signal: voltage tracks a
        let v_ex = plan.v_ex_ref * a / plan.a_ref;
        let v_ac = plan.v_ac_ref * a / plan.a_ref;
        let g_es = electrostatic_gradient(a, v_ex, plan.radius)
            + electrostatic_gradient(a, v_ac, plan.radius);
        let g_tot = gradient_law(a) + g_es;
        let delta_true = match shift_from_gradient(params.mass, omega0_true, g_tot) {
            Ok(d) => d,
            Err(_) => {
                truncated = true;
                break;
            }
        };
        let delta_recorded =
            delta_true + (omega0_true - omega0_cal) + noise.freq_noise_rms * randn(&mut rng);
        points.push(SweepPoint {
            a_pz_m: a_pz,
            delta_omega_rad_s: delta_recorded,
            v_ac: v_ac + noise.v_noise_rms * randn(&mut rng),
            v_ex: v_ex + noise.v_noise_rms * randn(&mut rng),
            t_s: t,
            sigma_delta_omega: noise.freq_noise_rms.max(1e-6),
            sigma_v: noise.v_noise_rms.max(1e-9),
        });
    }
    if points.is_empty() {
        return Err(InstrumentError::PullIn {
            dfda: gradient_law(plan.a_start),
            k: params.spring_k,
        });
    }
    Ok(SweepRecord {
        version: RECORD_VERSION,
        index,
        points,
        omega0_cal,
        sigma_omega0: noise.omega0_cal_sigma.max(1e-6),
        a0_true: Some(a0_center),
        truncated,
    })
}

/// Simulate a full run with slowly drifting offset and resonance.
pub fn simulate_run(
    gradient_law: &dyn Fn(f64) -> f64,
    params: &CantileverParams,
    plan: &RunPlan,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<SweepRecord>, InstrumentError> {
    if let Some(s) = &plan.a0_schedule {
        if s.len() != plan.n_sweeps {
            return Err(InstrumentError::InvalidParameter(
                "a0_schedule length must equal n_sweeps".into(),
            ));
        }
    }
    let mut drift_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_d41f7);
    // bounded random walk for omega0, rescaled to the configured span
    let mut walk = vec![0.0];
    for _ in 1..plan.n_sweeps.max(2) {
        let prev: f64 = *walk.last().unwrap();
        walk.push(prev + randn(&mut drift_rng));
    }
    let (wmin, wmax) = walk
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = (wmax - wmin).max(1e-30);
    let omega0_of = |j: usize| {
        params.omega0
            + if noise.omega0_drift_span > 0.0 {
                (walk[j] - wmin) / span * noise.omega0_drift_span
                    - 0.5 * noise.omega0_drift_span
            } else {
                0.0
            }
    };

    let sweep_duration = plan.sweep.n_points as f64 * plan.sweep.dwell + 30.0;
    let a0_rate = noise.a0_drift_per_sweep / sweep_duration;
    let mut out = Vec::with_capacity(plan.n_sweeps);
    for j in 0..plan.n_sweeps {
        let center_idx = if plan.sweep.n_points >= 16 {
            15
        } else {
            plan.sweep.n_points / 2
        };
        let t_center = j as f64 * sweep_duration + center_idx as f64 * plan.sweep.dwell;
        let (a0_center, rate) = match &plan.a0_schedule {
            Some(s) => (s[j], 0.0),
            None => (
                plan.a0_initial
                    + a0_rate * t_center
                    + noise.a0_jitter_rms * randn(&mut drift_rng),
                a0_rate,
            ),
        };
        out.push(simulate_sweep(
            gradient_law,
            params,
            &plan.sweep,
            noise,
            seed,
            j,
            j as f64 * sweep_duration,
            a0_center,
            rate,
            omega0_of(j),
        )?);
    }
    Ok(out)
}

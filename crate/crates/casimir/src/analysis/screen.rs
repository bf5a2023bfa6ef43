//! Sweep screening on offset drift.
//!
//! Two rules, both evaluated on the fitted offsets of the whole run so the
//! outcome is idempotent and independent of processing order:
//! `|delta a0| > 5 nm` flags the later sweep of the transition, and
//! `|delta a0(i) - delta a0(i-1)| > 3 nm` flags sweep `i`.

use super::a0::{fit_a0, A0FitModel};
use super::AnalysisError;
use crate::records::{RejectionReason, RunSet, SweepRecord};

pub const DA0_LIMIT: f64 = 5e-9;
pub const DDA0_LIMIT: f64 = 3e-9;

/// Fit every sweep's offset and apply the drift rules.
pub fn screen_sweeps(
    sweeps: Vec<SweepRecord>,
    model: &A0FitModel,
) -> Result<RunSet, AnalysisError> {
    if sweeps.is_empty() {
        return Err(AnalysisError::Empty("no sweeps to screen".into()));
    }
    let mut a0 = Vec::with_capacity(sweeps.len());
    let mut sigma_a0 = Vec::with_capacity(sweeps.len());
    let mut flags: Vec<Vec<RejectionReason>> = vec![Vec::new(); sweeps.len()];
    for (i, sweep) in sweeps.iter().enumerate() {
        match fit_a0(sweep, model) {
            Ok(fit) => {
                a0.push(fit.a0);
                sigma_a0.push(fit.sigma_a0);
            }
            Err(_) => {
                a0.push(f64::NAN);
                sigma_a0.push(f64::NAN);
                flags[i].push(RejectionReason::A0FitFailed);
            }
        }
    }
    let delta: Vec<Option<f64>> = (0..sweeps.len())
        .map(|i| {
            if i == 0 || a0[i].is_nan() || a0[i - 1].is_nan() {
                None
            } else {
                Some(a0[i] - a0[i - 1])
            }
        })
        .collect();
    for i in 1..sweeps.len() {
        if let Some(d) = delta[i] {
            if d.abs() > DA0_LIMIT {
                flags[i].push(RejectionReason::Da0Gt5nm);
            }
        }
        if i >= 2 {
            if let (Some(d1), Some(d0)) = (delta[i], delta[i - 1]) {
                if (d1 - d0).abs() > DDA0_LIMIT {
                    flags[i].push(RejectionReason::Dda0Gt3nm);
                }
            }
        }
    }
    Ok(RunSet {
        sweeps,
        a0,
        sigma_a0,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::{simulate_run, CantileverParams, NoiseModel, RunPlan};
    use crate::records::RejectionReason;

    fn law(a: f64) -> f64 {
        2.754e-3 * (100e-9 / a).powi(4)
    }

    fn run_with_schedule(schedule: Vec<f64>) -> RunSet {
        let params = CantileverParams::bundled_defaults();
        let plan = RunPlan {
            n_sweeps: schedule.len(),
            a0_schedule: Some(schedule),
            ..RunPlan::default()
        };
        let sweeps = simulate_run(&law, &params, &plan, &NoiseModel::quiet(), 3).unwrap();
        screen_sweeps(sweeps, &A0FitModel::default()).unwrap()
    }

    #[test]
    fn small_drifts_pass() {
        let rs = run_with_schedule(vec![70e-9, 71e-9, 72e-9, 73e-9]);
        assert!(rs.flags.iter().all(|f| f.is_empty()));
        assert_eq!(rs.accepted_indices(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn eight_nanometer_jump_flags_exactly_that_sweep() {
        let rs = run_with_schedule(vec![70e-9, 71e-9, 79e-9, 80e-9]);
        assert!(rs.flags[0].is_empty());
        assert!(rs.flags[1].is_empty());
        assert!(rs.flags[2].contains(&RejectionReason::Da0Gt5nm));
        // the 8 nm transition also breaks the drift-smoothness rule
        assert!(!rs.flags[2].is_empty());
    }

    #[test]
    fn drift_kink_flags_the_second_transition() {
        // per-transition drifts 0, 4, 0 nm: |ddelta| = 4 nm at the kink
        let rs = run_with_schedule(vec![70e-9, 70e-9, 74e-9, 74e-9]);
        assert!(rs.flags[1].is_empty());
        assert!(rs.flags[2].contains(&RejectionReason::Dda0Gt3nm));
        assert!(!rs.flags[2].contains(&RejectionReason::Da0Gt5nm)); // 4 nm < 5 nm
    }

    #[test]
    fn screening_is_idempotent() {
        let rs = run_with_schedule(vec![70e-9, 70e-9, 74e-9, 74e-9, 90e-9]);
        let again = screen_sweeps(rs.sweeps.clone(), &A0FitModel::default()).unwrap();
        assert_eq!(rs.flags, again.flags);
    }
}

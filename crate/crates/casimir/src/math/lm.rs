//! Damped least squares (Levenberg–Marquardt) on dense problems.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Relative step tolerance on the parameter vector.
    pub xtol: f64,
    /// Relative decrease tolerance on the cost.
    pub ftol: f64,
    pub lambda_init: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            xtol: 1e-12,
            ftol: 1e-14,
            lambda_init: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
}

/// Minimize `|r(x)|^2` starting from `x0`.
///
/// `jac` returns the Jacobian dr_i/dx_j; pass `None` to use forward
/// differences with a relative step of 1e-7.
pub fn levenberg_marquardt(
    r: &dyn Fn(&[f64]) -> DVector<f64>,
    jac: Option<&dyn Fn(&[f64]) -> DMatrix<f64>>,
    x0: &[f64],
    opts: &LmOptions,
) -> (Vec<f64>, LmReport) {
    let mut x = DVector::from_column_slice(x0);
    let mut res = r(x.as_slice());
    let mut cost = res.norm_squared();
    let mut lambda = opts.lambda_init;
    let n = x.len();

    let numeric_jac = |x: &DVector<f64>, res: &DVector<f64>| -> DMatrix<f64> {
        let mut j = DMatrix::zeros(res.len(), n);
        let mut xp = x.clone();
        for k in 0..n {
            let h = 1e-7 * x[k].abs().max(1e-9);
            xp[k] = x[k] + h;
            let rp = r(xp.as_slice());
            xp[k] = x[k];
            for i in 0..res.len() {
                j[(i, k)] = (rp[i] - res[i]) / h;
            }
        }
        j
    };

    let mut converged = false;
    let mut iter = 0;
    while iter < opts.max_iter {
        iter += 1;
        let j = match jac {
            Some(f) => f(x.as_slice()),
            None => numeric_jac(&x, &res),
        };
        let jtj = j.transpose() * &j;
        let jtr = j.transpose() * &res;
        // try steps with increasing damping until the cost decreases
        let mut stepped = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * (jtj[(k, k)].abs().max(1e-30));
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let dx = chol.solve(&jtr);
            let xn = &x - &dx;
            let rn = r(xn.as_slice());
            let cn = rn.norm_squared();
            if cn.is_finite() && cn < cost {
                let step_small = dx.norm() <= opts.xtol * (x.norm() + opts.xtol);
                let cost_small = (cost - cn) <= opts.ftol * cost;
                x = xn;
                res = rn;
                cost = cn;
                lambda = (lambda * 0.3).max(1e-14);
                stepped = true;
                if step_small || cost_small {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !stepped {
            // damping exhausted: local minimum to working precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    (
        x.as_slice().to_vec(),
        LmReport {
            iterations: iter,
            residual_norm: cost.sqrt(),
            converged,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exponential_decay_parameters() {
        // y = A exp(-k t), fit (A, k)
        let ts: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let truth = [2.5, 1.3];
        let ys: Vec<f64> = ts.iter().map(|t| truth[0] * (-truth[1] * t).exp()).collect();
        let r = |p: &[f64]| {
            DVector::from_iterator(
                ts.len(),
                ts.iter()
                    .zip(&ys)
                    .map(|(t, y)| p[0] * (-p[1] * t).exp() - y),
            )
        };
        let (p, rep) = levenberg_marquardt(&r, None, &[1.0, 0.5], &LmOptions::default());
        assert!(rep.converged);
        assert!((p[0] - 2.5).abs() < 1e-8, "{p:?}");
        assert!((p[1] - 1.3).abs() < 1e-8, "{p:?}");
    }

    #[test]
    fn rosenbrock_valley() {
        let r = |p: &[f64]| {
            DVector::from_column_slice(&[10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]])
        };
        let (p, _) = levenberg_marquardt(&r, None, &[-1.2, 1.0], &LmOptions::default());
        assert!((p[0] - 1.0).abs() < 1e-6 && (p[1] - 1.0).abs() < 1e-6, "{p:?}");
    }
}

//! Bisection Armijo-Wolfe line search on the noisy oracle.
//!
//! Trial steps start at 1. While no upper bracket exists the step doubles;
//! afterwards it bisects `[lo, hi]`:
//!
//! * Armijo fails: `hi = alpha`
//! * Armijo holds, curvature fails: `lo = alpha`
//! * both hold: accept.
//!
//! Curvature is only checked once Armijo passes, so every trial costs one
//! function evaluation and at most one gradient evaluation.

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, Vector};
use crate::problems::NoisyObjective;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams {
    pub c1: f64,
    pub c2: f64,
    /// Maximum number of trial steps before the search reports failure.
    pub max_bisections: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        LineSearchParams {
            c1: 0.01,
            c2: 0.5,
            max_bisections: 64,
        }
    }
}

impl LineSearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(invalid(format!(
                "line search needs 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if self.max_bisections == 0 {
            return Err(invalid("max_bisections must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    Success,
    Failure,
}

/// Noisy evaluations at the accepted point `x + alpha p`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptedPoint {
    pub x: Vector,
    pub f: f64,
    pub g: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub status: SearchStatus,
    /// Accepted step, 0 on failure.
    pub alpha: f64,
    pub trial_count: usize,
    pub f_evals: usize,
    pub g_evals: usize,
    /// Present exactly when `status == Success`.
    pub accepted: Option<AcceptedPoint>,
}

impl LineSearchOutcome {
    pub fn succeeded(&self) -> bool {
        self.status == SearchStatus::Success
    }
}

/// Sufficient decrease: `f_trial <= f_x + c1 * alpha * slope`.
#[inline]
pub fn armijo_holds(f_trial: f64, f_x: f64, alpha: f64, slope: f64, c1: f64) -> bool {
    f_trial <= f_x + c1 * alpha * slope
}

/// Weak Wolfe curvature: `trial_slope >= c2 * slope`.
#[inline]
pub fn curvature_holds(trial_slope: f64, slope: f64, c2: f64) -> bool {
    trial_slope >= c2 * slope
}

/// Evaluates the noisy Armijo condition at `x + alpha p` (one f-evaluation).
pub fn check_armijo<O: NoisyObjective + ?Sized>(
    oracle: &mut O,
    x: &Vector,
    p: &Vector,
    alpha: f64,
    f_x: f64,
    g_x: &Vector,
    c1: f64,
) -> Result<bool> {
    let slope = dot(p, g_x)?;
    let f_trial = oracle.f(&x.axpy(alpha, p)?)?;
    Ok(armijo_holds(f_trial, f_x, alpha, slope, c1))
}

/// Evaluates the noisy curvature condition at `x + alpha p` (one g-evaluation).
pub fn check_curvature<O: NoisyObjective + ?Sized>(
    oracle: &mut O,
    x: &Vector,
    p: &Vector,
    alpha: f64,
    g_x: &Vector,
    c2: f64,
) -> Result<bool> {
    let slope = dot(p, g_x)?;
    let g_trial = oracle.g(&x.axpy(alpha, p)?)?;
    Ok(curvature_holds(dot(p, &g_trial)?, slope, c2))
}

/// Runs the bisection search from `x` along `p` with cached `f_x = f(x)` and
/// `g_x = g(x)`.
///
/// A non-descent direction (`p.g_x >= 0`) is a contract error. Exhausting the
/// trial budget is an ordinary [`SearchStatus::Failure`].
pub fn armijo_wolfe_search<O: NoisyObjective + ?Sized>(
    oracle: &mut O,
    x: &Vector,
    p: &Vector,
    f_x: f64,
    g_x: &Vector,
    params: &LineSearchParams,
) -> Result<LineSearchOutcome> {
    params.validate()?;
    let slope = dot(p, g_x)?;
    if !(slope < 0.0) {
        return Err(Error::NotDescentDirection { slope });
    }

    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    let mut alpha = 1.0_f64;
    let (mut f_evals, mut g_evals) = (0, 0);

    for trial in 1..=params.max_bisections {
        let x_trial = x.axpy(alpha, p)?;
        let f_trial = oracle.f(&x_trial)?;
        f_evals += 1;
        if !armijo_holds(f_trial, f_x, alpha, slope, params.c1) {
            hi = alpha;
        } else {
            let g_trial = oracle.g(&x_trial)?;
            g_evals += 1;
            if curvature_holds(dot(p, &g_trial)?, slope, params.c2) {
                return Ok(LineSearchOutcome {
                    status: SearchStatus::Success,
                    alpha,
                    trial_count: trial,
                    f_evals,
                    g_evals,
                    accepted: Some(AcceptedPoint {
                        x: x_trial,
                        f: f_trial,
                        g: g_trial,
                    }),
                });
            }
            lo = alpha;
        }
        alpha = if hi.is_infinite() {
            2.0 * lo
        } else {
            0.5 * (lo + hi)
        };
    }

    Ok(LineSearchOutcome {
        status: SearchStatus::Failure,
        alpha: 0.0,
        trial_count: params.max_bisections,
        f_evals,
        g_evals,
        accepted: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;
    use crate::problems::{make_quadratic, NoiseModel, NoisyOracle, TrueProblem};

    fn half_square() -> crate::problems::Quadratic {
        make_quadratic(1, &[1.0], None).unwrap()
    }

    fn v(x: &[f64]) -> Vector {
        Vector::from(x)
    }

    #[test]
    fn armijo_examples() {
        let q = half_square();
        let mut o = NoisyOracle::new(&q, NoiseModel::noiseless());
        let (x, p, g) = (v(&[1.0]), v(&[-1.0]), v(&[1.0]));
        assert!(check_armijo(&mut o, &x, &p, 1.0, 0.5, &g, 0.01).unwrap());
        assert!(check_armijo(&mut o, &x, &p, 1e-12, 0.5, &g, 0.01).unwrap());
        assert!(!check_armijo(&mut o, &x, &p, 2.5, 0.5, &g, 0.01).unwrap());
        assert_eq!(o.calls().f_evals, 3);
        assert_eq!(o.calls().g_evals, 0);
    }

    #[test]
    fn curvature_examples() {
        let q = half_square();
        let mut o = NoisyOracle::new(&q, NoiseModel::noiseless());
        let (x, p, g) = (v(&[1.0]), v(&[-1.0]), v(&[1.0]));
        assert!(check_curvature(&mut o, &x, &p, 1.0, &g, 0.5).unwrap());
        assert!(!check_curvature(&mut o, &x, &p, 1e-12, &g, 0.5).unwrap());
        assert!(check_curvature(&mut o, &x, &p, 0.6, &g, 0.5).unwrap());
    }

    #[test]
    fn unit_step_accepted_first_trial() {
        let q = half_square();
        let mut o = NoisyOracle::new(&q, NoiseModel::noiseless());
        let out = armijo_wolfe_search(
            &mut o,
            &v(&[1.0]),
            &v(&[-1.0]),
            0.5,
            &v(&[1.0]),
            &LineSearchParams::default(),
        )
        .unwrap();
        assert_eq!(out.status, SearchStatus::Success);
        assert_eq!(out.alpha, 1.0);
        assert_eq!(out.trial_count, 1);
        assert_eq!((out.f_evals, out.g_evals), (1, 1));
        let acc = out.accepted.unwrap();
        assert_eq!(acc.x, v(&[0.0]));
        assert_eq!(acc.f, 0.0);
    }

    #[test]
    fn newton_direction_accepts_unit_step() {
        let q = make_quadratic(3, &[0.5, 2.0, 40.0], None).unwrap();
        let mut o = NoisyOracle::new(&q, NoiseModel::noiseless());
        let x = v(&[1.0, -3.0, 0.25]);
        let g = q.gradient(&x).unwrap();
        let t_inv = SymMatrix::from_diag(&[2.0, 0.5, 1.0 / 40.0]);
        let p = t_inv.apply(&g).unwrap().scaled(-1.0);
        let f = q.value(&x).unwrap();
        let out = armijo_wolfe_search(&mut o, &x, &p, f, &g, &LineSearchParams::default()).unwrap();
        assert!(out.succeeded());
        assert_eq!(out.alpha, 1.0);
    }

    #[test]
    fn ascent_direction_is_contract_error() {
        let q = half_square();
        let mut o = NoisyOracle::new(&q, NoiseModel::noiseless());
        let err = armijo_wolfe_search(
            &mut o,
            &v(&[1.0]),
            &v(&[1.0]),
            0.5,
            &v(&[1.0]),
            &LineSearchParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotDescentDirection { .. }));
        assert_eq!(o.calls().f_evals, 0);
    }

    #[test]
    fn bracketing_doubles_then_bisects() {
        // phi = x^2/2 from x = 1 along p = -0.01: the minimizer is at alpha = 100.
        let q = half_square();
        let mut o = NoisyOracle::new(&q, NoiseModel::noiseless());
        let out = armijo_wolfe_search(
            &mut o,
            &v(&[1.0]),
            &v(&[-0.01]),
            0.5,
            &v(&[1.0]),
            &LineSearchParams::default(),
        )
        .unwrap();
        assert!(out.succeeded());
        // acceptable steps are [50, 198]; 1, 2, ..., 32 fail curvature, 64 is accepted
        assert_eq!(out.alpha, 64.0);
        assert_eq!(out.trial_count, 7);
        assert_eq!((out.f_evals, out.g_evals), (7, 7));
    }

    #[test]
    fn exhausted_budget_reports_failure() {
        let q = half_square();
        let mut o = NoisyOracle::new(&q, NoiseModel::noiseless());
        let params = LineSearchParams {
            max_bisections: 3,
            ..Default::default()
        };
        // A very long direction: Armijo fails at 1, 1/2, 1/4.
        let out = armijo_wolfe_search(&mut o, &v(&[1.0]), &v(&[-1e3]), 0.5, &v(&[1.0]), &params).unwrap();
        assert_eq!(out.status, SearchStatus::Failure);
        assert_eq!(out.alpha, 0.0);
        assert_eq!(out.trial_count, 3);
        assert_eq!(out.f_evals, 3);
        assert!(out.accepted.is_none());
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = LineSearchParams {
            c1: 0.5,
            c2: 0.1,
            max_bisections: 10,
        };
        assert!(bad.validate().is_err());
        let bad = LineSearchParams {
            max_bisections: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}

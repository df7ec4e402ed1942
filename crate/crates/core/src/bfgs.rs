//! BFGS driver for noisy objectives.
//!
//! Each iteration computes `p = -H g`, runs the Armijo-Wolfe bisection search,
//! builds a curvature pair and updates the inverse Hessian approximation. When
//! the accepted step is shorter than the lengthening parameter `l` (including a
//! failed search, where the step is zero) the pair is instead taken over the
//! interval `l p / ||p||` with two fresh gradient evaluations, which keeps
//! `s.y > 0` whenever `l > 2 eps_g / m`.
//!
//! The driver only talks to a [`NoisyObjective`]. Metrics that need the true
//! objective (gaps, true gradients, condition numbers) are computed by a
//! [`Recorder`] and never feed back into the iteration.

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, cosine, dot, norm2, SymMatrix, Vector, JACOBI_TOL};
use crate::linesearch::{armijo_wolfe_search, LineSearchParams};
use crate::problems::{CallCounts, NoisyObjective, TrueProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePair {
    pub s: Vector,
    pub y: Vector,
    pub lengthened: bool,
}

impl CurvaturePair {
    pub fn sy(&self) -> Result<f64> {
        dot(&self.s, &self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgoConfig {
    /// Lengthening parameter `l`.
    pub l: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub max_consecutive_failures: usize,
    pub line_search: LineSearchParams,
}

impl AlgoConfig {
    /// Default stopping rules and line search with the given lengthening parameter.
    pub fn with_lengthening(l: f64) -> Self {
        AlgoConfig {
            l,
            grad_tol: 1e-5,
            max_iters: 60,
            max_consecutive_failures: 30,
            line_search: LineSearchParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(invalid(format!("lengthening parameter must be positive, got {}", self.l)));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(invalid(format!("grad_tol must be non-negative, got {}", self.grad_tol)));
        }
        if self.max_consecutive_failures == 0 {
            return Err(invalid("max_consecutive_failures must be at least 1"));
        }
        self.line_search.validate()
    }
}

/// Noisy evaluations at the current iterate, carried over from the accepted
/// line-search trial so that `f(x_k)` is a single draw per iterate.
#[derive(Debug, Clone, PartialEq)]
struct Cached {
    f: Option<f64>,
    g: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsState {
    pub x: Vector,
    pub h: SymMatrix,
    pub iter: usize,
    pub consecutive_failures: usize,
    cached: Option<Cached>,
}

impl BfgsState {
    pub fn new(x0: Vector, h0: SymMatrix) -> Result<Self> {
        if x0.dim() != h0.dim() {
            return Err(Error::DimensionMismatch {
                expected: h0.dim(),
                found: x0.dim(),
            });
        }
        if !x0.is_finite() || !h0.is_finite() {
            return Err(invalid("starting point and H0 must be finite"));
        }
        let min = linalg::jacobi_eigenvalues(&h0, JACOBI_TOL)?[0];
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
            });
        }
        Ok(BfgsState {
            x: x0,
            h: h0,
            iter: 0,
            consecutive_failures: 0,
            cached: None,
        })
    }
}

/// One row of per-iteration metrics, describing iterate `x_k` and the step
/// taken from it.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub run_id: usize,
    pub iter: usize,
    /// Noisy `f(x_k)`; NaN if the run converged before `f` was ever evaluated.
    pub f_noisy: f64,
    pub phi_true: f64,
    pub gap: f64,
    pub grad_true_norm: f64,
    pub grad_noisy_norm: f64,
    /// Cosine between `-p_k` and `g(x_k)`, 0 when undefined.
    pub cos_theta: f64,
    /// Cosine between `-p_k` and the true gradient, 0 when undefined.
    pub cos_theta_tilde: f64,
    pub alpha: f64,
    /// `cond(H_k^{1/2} hess(x_k) H_k^{1/2})`.
    pub cond_metric: f64,
    pub ls_trials: usize,
    pub ls_failed: bool,
    pub lengthened: bool,
    /// Oracle calls made during this iteration.
    pub f_evals: u64,
    pub g_evals: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Continue,
    Converged,
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    Stalled,
    IterLimit,
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RunStatus::Converged => "converged",
            RunStatus::Stalled => "stalled",
            RunStatus::IterLimit => "iter_limit",
        })
    }
}

/// `p = -H g`.
pub fn compute_direction(h: &SymMatrix, g: &Vector) -> Result<Vector> {
    Ok(h.apply(g)?.scaled(-1.0))
}

/// Inverse BFGS update
/// `H' = (I - rho s y^T) H (I - rho y s^T) + rho s s^T`, `rho = 1 / s^T y`.
pub fn bfgs_update(h: &SymMatrix, pair: &CurvaturePair) -> Result<SymMatrix> {
    let (s, y) = (&pair.s, &pair.y);
    if s.dim() != h.dim() || y.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: if s.dim() != h.dim() { s.dim() } else { y.dim() },
        });
    }
    let sy = dot(s, y)?;
    if !(sy > 0.0) {
        return Err(Error::NonPositiveCurvature { sy });
    }
    let rho = 1.0 / sy;
    let hy = h.apply(y)?;
    let yhy = dot(y, &hy)?;
    let ss_coef = rho * rho * yhy + rho;
    Ok(SymMatrix::from_upper_fn(h.dim(), |i, j| {
        h.get(i, j) - rho * (s[i] * hy[j] + hy[i] * s[j]) + ss_coef * s[i] * s[j]
    }))
}

/// Builds the curvature pair for step `alpha p` from `x`.
///
/// If `||alpha p|| >= l` the pair is `(alpha p, g(x + alpha p) - g_x)`, reusing
/// `g_at_step` when the caller already has that gradient. Otherwise the
/// interval is lengthened to `s = l p / ||p||` and `y = g(x + s) - g(x)` with two
/// fresh gradient evaluations.
pub fn build_pair<O: NoisyObjective + ?Sized>(
    oracle: &mut O,
    x: &Vector,
    p: &Vector,
    alpha: f64,
    g_x: &Vector,
    g_at_step: Option<&Vector>,
    l: f64,
) -> Result<CurvaturePair> {
    let p_norm = norm2(p);
    if p_norm == 0.0 {
        return Err(Error::ZeroVector("search direction"));
    }
    if !(alpha >= 0.0) {
        return Err(invalid(format!("step length must be non-negative, got {alpha}")));
    }
    let step = p.scaled(alpha);
    if norm2(&step) >= l {
        let g_new = match g_at_step {
            Some(g) => g.clone(),
            None => oracle.g(&x.add(&step)?)?,
        };
        let y = g_new.sub(g_x)?;
        Ok(CurvaturePair {
            s: step,
            y,
            lengthened: false,
        })
    } else {
        let s = p.scaled(l / p_norm);
        let g_far = oracle.g(&x.add(&s)?)?;
        let g_here = oracle.g(x)?;
        Ok(CurvaturePair {
            y: g_far.sub(&g_here)?,
            s,
            lengthened: true,
        })
    }
}

/// True-problem metrics at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMetrics {
    pub phi: f64,
    pub gap: f64,
    pub grad_true: Vector,
    pub grad_true_norm: f64,
    pub cond_metric: f64,
}

/// Instrumentation with access to the true objective.
#[derive(Clone, Copy)]
pub struct Recorder<'p> {
    problem: &'p dyn TrueProblem,
}

impl<'p> Recorder<'p> {
    pub fn new(problem: &'p dyn TrueProblem) -> Self {
        Recorder { problem }
    }

    pub fn problem(&self) -> &'p dyn TrueProblem {
        self.problem
    }

    pub fn point(&self, x: &Vector, h: &SymMatrix) -> Result<PointMetrics> {
        let phi = self.problem.value(x)?;
        let grad_true = self.problem.gradient(x)?;
        Ok(PointMetrics {
            phi,
            gap: phi - self.problem.optimal_value(),
            grad_true_norm: norm2(&grad_true),
            grad_true,
            cond_metric: hessian_fit_condition(h, &self.problem.hessian(x)?)?,
        })
    }
}

/// `cond(H^{1/2} A H^{1/2})`; equals 1 when `H = A^{-1}`.
pub fn hessian_fit_condition(h: &SymMatrix, hessian: &SymMatrix) -> Result<f64> {
    let root = linalg::sym_sqrt(h, JACOBI_TOL)?;
    linalg::condition_number(&root.sandwich(hessian)?, JACOBI_TOL)
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: BfgsState,
    pub record: IterateRecord,
    pub status: StepStatus,
    /// The pair used for the update; `None` when the iteration converged.
    pub pair: Option<CurvaturePair>,
}

/// Executes one iteration from `state`.
pub fn step<O: NoisyObjective + ?Sized>(
    mut state: BfgsState,
    oracle: &mut O,
    recorder: &Recorder<'_>,
    config: &AlgoConfig,
    run_id: usize,
) -> Result<StepOutcome> {
    let calls_before = oracle.calls();
    let cached = match state.cached.take() {
        Some(c) => c,
        None => Cached {
            f: None,
            g: oracle.g(&state.x)?,
        },
    };
    let g_x = cached.g;
    let g_norm = norm2(&g_x);
    let metrics = recorder.point(&state.x, &state.h)?;
    let p = compute_direction(&state.h, &g_x)?;
    let minus_p = p.scaled(-1.0);
    let cos_theta = cosine(&minus_p, &g_x)?.unwrap_or(0.0);
    let cos_theta_tilde = cosine(&minus_p, &metrics.grad_true)?.unwrap_or(0.0);

    let mut record = IterateRecord {
        run_id,
        iter: state.iter,
        f_noisy: cached.f.unwrap_or(f64::NAN),
        phi_true: metrics.phi,
        gap: metrics.gap,
        grad_true_norm: metrics.grad_true_norm,
        grad_noisy_norm: g_norm,
        cos_theta,
        cos_theta_tilde,
        alpha: 0.0,
        cond_metric: metrics.cond_metric,
        ls_trials: 0,
        ls_failed: false,
        lengthened: false,
        f_evals: 0,
        g_evals: 0,
    };

    if g_norm <= config.grad_tol {
        let calls = oracle.calls();
        record.f_evals = calls.f_evals - calls_before.f_evals;
        record.g_evals = calls.g_evals - calls_before.g_evals;
        state.cached = Some(Cached { f: cached.f, g: g_x });
        return Ok(StepOutcome {
            state,
            record,
            status: StepStatus::Converged,
            pair: None,
        });
    }

    let f_x = match cached.f {
        Some(f) => f,
        None => oracle.f(&state.x)?,
    };
    record.f_noisy = f_x;

    let search = armijo_wolfe_search(oracle, &state.x, &p, f_x, &g_x, &config.line_search)?;
    record.alpha = search.alpha;
    record.ls_trials = search.trial_count;
    record.ls_failed = !search.succeeded();

    let pair = build_pair(
        oracle,
        &state.x,
        &p,
        search.alpha,
        &g_x,
        search.accepted.as_ref().map(|a| &a.g),
        config.l,
    )?;
    record.lengthened = pair.lengthened;
    let h_next = bfgs_update(&state.h, &pair)?;

    let (x_next, cached_next) = match search.accepted {
        Some(acc) => {
            state.consecutive_failures = 0;
            (
                acc.x,
                Cached {
                    f: Some(acc.f),
                    g: acc.g,
                },
            )
        }
        None => {
            state.consecutive_failures += 1;
            (
                state.x.clone(),
                Cached {
                    f: Some(f_x),
                    g: g_x,
                },
            )
        }
    };

    let calls = oracle.calls();
    record.f_evals = calls.f_evals - calls_before.f_evals;
    record.g_evals = calls.g_evals - calls_before.g_evals;

    let status = if state.consecutive_failures >= config.max_consecutive_failures {
        StepStatus::Stalled
    } else {
        StepStatus::Continue
    };
    state.x = x_next;
    state.h = h_next;
    state.iter += 1;
    state.cached = Some(cached_next);
    Ok(StepOutcome {
        state,
        record,
        status,
        pair: Some(pair),
    })
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<IterateRecord>,
    pub status: RunStatus,
    pub final_state: BfgsState,
    /// Metrics at the final iterate (which has no record when the iteration limit hits).
    pub final_point: PointMetrics,
    pub calls: CallCounts,
}

/// Runs the method from `x0`, `H0` until convergence (`||g|| <= grad_tol`),
/// `max_consecutive_failures` failed line searches in a row, or `max_iters`
/// iterations.
pub fn run<O: NoisyObjective + ?Sized>(
    x0: Vector,
    h0: SymMatrix,
    oracle: &mut O,
    recorder: &Recorder<'_>,
    config: &AlgoConfig,
    run_id: usize,
) -> Result<RunResult> {
    config.validate()?;
    if x0.dim() != oracle.dim() {
        return Err(Error::DimensionMismatch {
            expected: oracle.dim(),
            found: x0.dim(),
        });
    }
    let mut state = BfgsState::new(x0, h0)?;
    let mut records = Vec::with_capacity(config.max_iters);
    let status = loop {
        if state.iter >= config.max_iters {
            break RunStatus::IterLimit;
        }
        let out = step(state, oracle, recorder, config, run_id)?;
        state = out.state;
        records.push(out.record);
        match out.status {
            StepStatus::Converged => break RunStatus::Converged,
            StepStatus::Stalled => break RunStatus::Stalled,
            StepStatus::Continue => {}
        }
    };
    let final_point = recorder.point(&state.x, &state.h)?;
    Ok(RunResult {
        records,
        status,
        final_state: state,
        final_point,
        calls: oracle.calls(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_quadratic, NoiseModel, NoisyOracle, Quadratic};

    fn v(x: &[f64]) -> Vector {
        Vector::from(x)
    }

    fn default_problem() -> Quadratic {
        make_quadratic(4, &[1e-2, 1.0, 1e2, 1e4], None).unwrap()
    }

    #[test]
    fn direction_examples() {
        let p = compute_direction(&SymMatrix::identity(2), &v(&[1.0, 2.0])).unwrap();
        assert_eq!(p, v(&[-1.0, -2.0]));
        let t = [2.0, 4.0, 8.0];
        let x = v(&[1.0, -1.0, 3.0]);
        let g = SymMatrix::from_diag(&t).apply(&x).unwrap();
        let h = SymMatrix::from_diag(&[0.5, 0.25, 0.125]);
        assert_eq!(compute_direction(&h, &g).unwrap(), x.scaled(-1.0));
        assert_eq!(compute_direction(&h, &Vector::zeros(3)).unwrap(), v(&[-0.0, -0.0, -0.0]));
    }

    #[test]
    fn update_examples() {
        let pair = CurvaturePair {
            s: v(&[1.0]),
            y: v(&[4.0]),
            lengthened: false,
        };
        for h in [0.1, 1.0, 37.0] {
            let out = bfgs_update(&SymMatrix::from_diag(&[h]), &pair).unwrap();
            assert!((out.get(0, 0) - 0.25).abs() < 1e-15);
        }

        let e = v(&[0.0, 1.0, 0.0]);
        let pair = CurvaturePair {
            s: e.clone(),
            y: e,
            lengthened: false,
        };
        assert_eq!(bfgs_update(&SymMatrix::identity(3), &pair).unwrap(), SymMatrix::identity(3));

        let pair = CurvaturePair {
            s: v(&[1.0, 0.0]),
            y: v(&[2.0, 1.0]),
            lengthened: false,
        };
        let h = bfgs_update(&SymMatrix::identity(2), &pair).unwrap();
        let hy = h.apply(&pair.y).unwrap();
        assert!((hy[0] - 1.0).abs() < 1e-12 && hy[1].abs() < 1e-12, "{hy:?}");
        // (I - rho s y^T)(I - rho y s^T) + rho s s^T with rho = 1/2, by hand
        let expected = SymMatrix::from_rows(&[vec![0.75, -0.5], vec![-0.5, 1.0]]).unwrap();
        assert!(h.frobenius_distance(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn update_rejects_non_positive_curvature() {
        let pair = CurvaturePair {
            s: v(&[1.0, 0.0]),
            y: v(&[-1.0, 3.0]),
            lengthened: false,
        };
        assert!(matches!(
            bfgs_update(&SymMatrix::identity(2), &pair),
            Err(Error::NonPositiveCurvature { .. })
        ));
    }

    #[test]
    fn failed_search_always_lengthens() {
        let q = default_problem();
        let mut o = NoisyOracle::new(&q, NoiseModel::new(1.0, 1.0, 3).unwrap());
        let x = v(&[1.0, 2.0, 3.0, 4.0]);
        let g = o.g(&x).unwrap();
        let p = g.scaled(-1.0);
        let before = o.calls();
        let pair = build_pair(&mut o, &x, &p, 0.0, &g, None, 400.0).unwrap();
        assert!(pair.lengthened);
        assert!((norm2(&pair.s) / 400.0 - 1.0).abs() < 1e-12);
        assert_eq!(o.calls().g_evals - before.g_evals, 2);
        assert!(pair.sy().unwrap() > 0.0);
    }

    #[test]
    fn boundary_step_is_not_lengthened() {
        let q = default_problem();
        let mut o = NoisyOracle::new(&q, NoiseModel::noiseless());
        let x = v(&[1.0, 1.0, 1.0, 1.0]);
        let g = o.g(&x).unwrap();
        let p = v(&[-3.0, 0.0, -4.0, 0.0]);
        let pair = build_pair(&mut o, &x, &p, 2.0, &g, None, 10.0).unwrap();
        assert!(!pair.lengthened);
        assert_eq!(pair.s, p.scaled(2.0));
    }

    #[test]
    fn lengthened_pair_on_noiseless_quadratic_is_exact() {
        let q = make_quadratic(3, &[0.5, 2.0, 9.0], Some(4)).unwrap();
        let mut o = NoisyOracle::new(&q, NoiseModel::noiseless());
        let x = v(&[0.3, -1.0, 2.0]);
        let g = o.g(&x).unwrap();
        let p = v(&[1.0, 1.0, -2.0]);
        let pair = build_pair(&mut o, &x, &p, 1e-3, &g, None, 5.0).unwrap();
        assert!(pair.lengthened);
        let ts = q.matrix().apply(&pair.s).unwrap();
        assert!(norm2(&pair.y.sub(&ts).unwrap()) < 1e-12 * norm2(&ts));
        // y.s / s.s is the Rayleigh quotient of T at s
        let rq = dot(&pair.s, &ts).unwrap() / dot(&pair.s, &pair.s).unwrap();
        let ratio = pair.sy().unwrap() / dot(&pair.s, &pair.s).unwrap();
        assert!((ratio - rq).abs() < 1e-12 * rq);
    }

    #[test]
    fn build_pair_rejects_zero_direction() {
        let q = default_problem();
        let mut o = NoisyOracle::new(&q, NoiseModel::noiseless());
        let err = build_pair(&mut o, &Vector::zeros(4), &Vector::zeros(4), 1.0, &Vector::zeros(4), None, 1.0);
        assert!(matches!(err, Err(Error::ZeroVector(_))));
    }

    #[test]
    fn zero_gradient_converges_immediately() {
        let q = default_problem();
        let mut o = NoisyOracle::new(&q, NoiseModel::noiseless());
        let state = BfgsState::new(Vector::zeros(4), SymMatrix::identity(4)).unwrap();
        let rec = Recorder::new(&q);
        let out = step(state, &mut o, &rec, &AlgoConfig::with_lengthening(1e-8), 0).unwrap();
        assert_eq!(out.status, StepStatus::Converged);
        assert_eq!(
            o.calls(),
            CallCounts {
                f_evals: 0,
                g_evals: 1
            }
        );
        assert!(out.pair.is_none());
    }

    #[test]
    fn exact_inverse_hessian_takes_newton_step() {
        let q = make_quadratic(2, &[1.0, 2.0], None).unwrap();
        let mut o = NoisyOracle::new(&q, NoiseModel::noiseless());
        let state = BfgsState::new(v(&[3.0, -2.0]), SymMatrix::from_diag(&[1.0, 0.5])).unwrap();
        let rec = Recorder::new(&q);
        let out = step(state, &mut o, &rec, &AlgoConfig::with_lengthening(1e-8), 0).unwrap();
        assert_eq!(out.record.alpha, 1.0);
        assert_eq!(out.state.x, v(&[0.0, 0.0]));
        assert!((out.record.cond_metric - 1.0).abs() < 1e-14);
    }

    #[test]
    fn failed_search_keeps_iterate_but_updates_h() {
        let q = default_problem();
        // eps_g far above the gradient: the noisy slope at trial points is random
        let mut o = NoisyOracle::new(&q, NoiseModel::new(1e3, 1e3, 1).unwrap());
        let rec = Recorder::new(&q);
        let cfg = AlgoConfig {
            line_search: LineSearchParams {
                max_bisections: 1,
                ..Default::default()
            },
            ..AlgoConfig::with_lengthening(4e5)
        };
        let mut state = BfgsState::new(v(&[0.1, 0.1, 0.1, 0.1]), SymMatrix::identity(4)).unwrap();
        let mut saw_failure = false;
        for _ in 0..20 {
            let x_before = state.x.clone();
            let h_before = state.h.clone();
            let out = step(state, &mut o, &rec, &cfg, 0).unwrap();
            if out.record.ls_failed {
                saw_failure = true;
                assert_eq!(out.record.alpha, 0.0);
                assert_eq!(out.state.x, x_before);
                assert!(out.record.lengthened);
                assert_ne!(out.state.h, h_before);
            }
            state = out.state;
        }
        assert!(saw_failure);
    }

    #[test]
    fn zero_iteration_budget() {
        let q = default_problem();
        let mut o = NoisyOracle::new(&q, NoiseModel::noiseless());
        let cfg = AlgoConfig {
            max_iters: 0,
            ..AlgoConfig::with_lengthening(1e-8)
        };
        let out = run(Vector::filled(4, 1e5), SymMatrix::identity(4), &mut o, &Recorder::new(&q), &cfg, 0).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.status, RunStatus::IterLimit);
        assert_eq!(out.calls, CallCounts::default());
    }

    #[test]
    fn noiseless_run_converges() {
        let q = default_problem();
        let mut o = NoisyOracle::new(&q, NoiseModel::noiseless());
        let out = run(
            Vector::filled(4, 1e5),
            SymMatrix::identity(4),
            &mut o,
            &Recorder::new(&q),
            &AlgoConfig::with_lengthening(1e-8),
            0,
        )
        .unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        assert!(out.records.len() <= 60);
        assert!(out.final_point.grad_true_norm <= 1e-5);
    }

    #[test]
    fn call_accounting_matches_records() {
        let q = default_problem();
        let mut o = NoisyOracle::new(&q, NoiseModel::new(1.0, 1.0, 5).unwrap());
        let out = run(
            Vector::filled(4, 1e5),
            SymMatrix::identity(4),
            &mut o,
            &Recorder::new(&q),
            &AlgoConfig::with_lengthening(400.0),
            0,
        )
        .unwrap();
        let f: u64 = out.records.iter().map(|r| r.f_evals).sum();
        let g: u64 = out.records.iter().map(|r| r.g_evals).sum();
        assert_eq!(CallCounts { f_evals: f, g_evals: g }, out.calls);
        for (k, r) in out.records.iter().enumerate() {
            let first = u64::from(k == 0);
            // f: one per trial; g: at most one per trial plus lengthening
            assert_eq!(r.f_evals, r.ls_trials as u64 + first);
            assert!(r.g_evals <= r.ls_trials as u64 + first + 2 * u64::from(r.lengthened));
        }
    }

    #[test]
    fn rejects_indefinite_h0() {
        let err = BfgsState::new(Vector::zeros(2), SymMatrix::from_diag(&[1.0, -1.0]));
        assert!(matches!(err, Err(Error::NotPositiveDefinite { .. })));
    }
}

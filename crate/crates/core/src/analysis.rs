//! Constants, thresholds and predicates from the convergence analysis of the
//! noisy BFGS method, as executable code.
//!
//! None of this feeds back into the optimizer. Everything here is a pure
//! function used for diagnostics, tests and the experiment summary.

use serde::Serialize;

use crate::bfgs::{CurvaturePair, IterateRecord};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, dot, norm2, SymMatrix, JACOBI_TOL};

/// Absolute slack on the eigenvalue-interval inequality.
pub const INTERVAL_SLACK: f64 = 1e-12;
/// Absolute slack on the one-step descent bound.
pub const DESCENT_SLACK: f64 = 1e-9;

fn check_line_search_constants(c1: f64, c2: f64) -> Result<()> {
    if !(0.0 < c1 && c1 < c2 && c2 < 1.0) {
        return Err(invalid(format!("need 0 < c1 < c2 < 1, got c1 = {c1}, c2 = {c2}")));
    }
    Ok(())
}

/// `(y.s / s.s, y.y / y.s)` for a curvature pair.
pub fn curvature_ratios(s: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let ss = dot(s, s)?;
    let ys = dot(y, s)?;
    if ss == 0.0 {
        return Err(Error::ZeroVector("s"));
    }
    if ys == 0.0 {
        return Err(invalid("y.s = 0"));
    }
    Ok((ys / ss, dot(y, y)? / ys))
}

pub fn pair_curvature_ratios(pair: &CurvaturePair) -> Result<(f64, f64)> {
    curvature_ratios(&pair.s, &pair.y)
}

/// Curvature bounds guaranteed for pairs with `||s|| >= l`:
/// `m_hat = m - 2 eps_g / l`, `M_hat = M + 2 eps_g / l`. Requires `l > 2 eps_g / m`.
pub fn lengthening_bounds(m: f64, big_m: f64, eps_g: f64, l: f64) -> Result<(f64, f64)> {
    if !(m > 0.0 && big_m >= m) {
        return Err(invalid(format!("need 0 < m <= M, got m = {m}, M = {big_m}")));
    }
    if !(eps_g >= 0.0) || !(l > 0.0) {
        return Err(invalid(format!("need eps_g >= 0 and l > 0, got eps_g = {eps_g}, l = {l}")));
    }
    let bound = 2.0 * eps_g / m;
    if !(l > bound) {
        return Err(Error::LengtheningTooShort { l, bound });
    }
    let shift = 2.0 * eps_g / l;
    Ok((m - shift, big_m + shift))
}

/// `||y - (L + mu)/2 s|| <= (L - mu)/2 ||s||`, true iff some symmetric `H` with
/// spectrum in `[mu, L]` maps `s` to `y`.
pub fn eigen_interval_predicate(s: &[f64], y: &[f64], mu: f64, big_l: f64) -> Result<bool> {
    if s.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: s.len(),
            found: y.len(),
        });
    }
    if norm2(s) == 0.0 {
        return Err(Error::ZeroVector("s"));
    }
    if norm2(y) == 0.0 {
        return Err(Error::ZeroVector("y"));
    }
    if !(0.0 < mu && mu <= big_l) {
        return Err(invalid(format!("need 0 < mu <= L, got mu = {mu}, L = {big_l}")));
    }
    let mid = 0.5 * (big_l + mu);
    let residual: Vec<f64> = y.iter().zip(s).map(|(yi, si)| yi - mid * si).collect();
    Ok(norm2(&residual) <= 0.5 * (big_l - mu) * norm2(s) + INTERVAL_SLACK)
}

/// Symmetric `H` with `H s = y` and spectrum in `[mu, L]`, built as
/// `(L + mu)/2 I + (||r|| / ||s||) Q` where `r = y - (L + mu)/2 s` and `Q` is the
/// reflection taking `s / ||s||` to `r / ||r||`.
pub fn construct_interval_map(s: &[f64], y: &[f64], mu: f64, big_l: f64) -> Result<SymMatrix> {
    if !eigen_interval_predicate(s, y, mu, big_l)? {
        return Err(Error::OutsideInterval { mu, big_l });
    }
    let d = s.len();
    let mid = 0.5 * (big_l + mu);
    let r: Vec<f64> = y.iter().zip(s).map(|(yi, si)| yi - mid * si).collect();
    let r_norm = norm2(&r);
    if r_norm == 0.0 {
        return Ok(SymMatrix::identity(d).scaled(mid));
    }
    let s_norm = norm2(s);
    let scale = r_norm / s_norm;
    let u: Vec<f64> = s.iter().map(|x| x / s_norm).collect();
    let v: Vec<f64> = r.iter().map(|x| x / r_norm).collect();
    let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
    let w_norm = norm2(&w);
    if w_norm == 0.0 {
        // v = -u: Q = -I
        return Ok(SymMatrix::identity(d).scaled(mid - scale));
    }
    let e: Vec<f64> = w.iter().map(|x| x / w_norm).collect();
    Ok(SymMatrix::from_upper_fn(d, |i, j| {
        let q = 2.0 * e[i] * e[j] - if i == j { 1.0 } else { 0.0 };
        (if i == j { mid } else { 0.0 }) + scale * q
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoodIterateConstants {
    pub beta0: f64,
    pub beta1: f64,
    /// `exp(-beta0 / 2)` is below the smallest normal double and `beta1` was flushed to 0.
    pub beta1_underflow: bool,
}

/// `beta0 = (tr B0 - log det B0 + M_hat - 1 - log m_hat) / (1 - q)` with
/// `B0 = H0^{-1}`, and `beta1 = exp(-beta0 / 2)`.
pub fn good_iterate_constants(q: f64, h0: &SymMatrix, m_hat: f64, big_m_hat: f64) -> Result<GoodIterateConstants> {
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid(format!("q must lie in (0, 1), got {q}")));
    }
    if !(m_hat > 0.0 && big_m_hat >= m_hat) {
        return Err(invalid(format!(
            "need 0 < m_hat <= M_hat, got m_hat = {m_hat}, M_hat = {big_m_hat}"
        )));
    }
    let eig = linalg::jacobi_eigenvalues(h0, JACOBI_TOL)?;
    if let Some(&min) = eig.first() {
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
    }
    let trace_b0: f64 = eig.iter().map(|l| 1.0 / l).sum();
    let log_det_b0: f64 = -eig.iter().map(|l| l.ln()).sum::<f64>();
    let beta0 = (trace_b0 - log_det_b0 + big_m_hat - 1.0 - m_hat.ln()) / (1.0 - q);
    let beta1 = (-0.5 * beta0).exp();
    let underflow = !beta1.is_normal();
    Ok(GoodIterateConstants {
        beta0,
        beta1: if underflow { 0.0 } else { beta1 },
        beta1_underflow: underflow,
    })
}

/// Step-size transfer constants for `delta1 = delta2 = (c2 - c1)/4`,
/// `delta1_hat = c1/2`, `delta2_hat = (1 - c2)/2`:
///
/// `A = max{16 sqrt2 / sqrt((c2 - c1)(4 - c1 - 3 c2)), 8 / sqrt(c1 (1 - c2))}`,
/// `B = max{8 / (1 - c2), 8 (1 + c1) / (c2 - c1) + 6}`.
pub fn ab_constants(c1: f64, c2: f64) -> Result<(f64, f64)> {
    check_line_search_constants(c1, c2)?;
    let a = f64::max(
        16.0 * std::f64::consts::SQRT_2 / ((c2 - c1) * (4.0 - c1 - 3.0 * c2)).sqrt(),
        8.0 / (c1 * (1.0 - c2)).sqrt(),
    );
    let b = f64::max(8.0 / (1.0 - c2), 8.0 * (1.0 + c1) / (c2 - c1) + 6.0);
    Ok((a, b))
}

/// A gradient-norm threshold that may be unbounded when `beta1` underflows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Threshold {
    Finite(f64),
    Unbounded,
}

impl Threshold {
    pub fn value(&self) -> f64 {
        match *self {
            Threshold::Finite(v) => v,
            Threshold::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Threshold::Unbounded)
    }
}

/// Gradient-norm radius of the neighborhood `N1`:
/// `max{A sqrt(M eps_f) / beta1, B eps_g / beta1}`.
pub fn n1_radius(a: f64, b: f64, beta1: f64, big_m: f64, eps_f: f64, eps_g: f64) -> Threshold {
    let numerator = f64::max(a * (big_m * eps_f).sqrt(), b * eps_g);
    if numerator == 0.0 {
        return Threshold::Finite(0.0);
    }
    if !(beta1 > 0.0) {
        return Threshold::Unbounded;
    }
    let r = numerator / beta1;
    if r.is_finite() {
        Threshold::Finite(r)
    } else {
        Threshold::Unbounded
    }
}

/// Gradient norm above which a good iterate never needs lengthening:
/// `max{N1 radius, 4 l M / ((1 - c2) beta1)}`.
#[allow(clippy::too_many_arguments)]
pub fn lengthening_unneeded_threshold(
    a: f64,
    b: f64,
    beta1: f64,
    big_m: f64,
    eps_f: f64,
    eps_g: f64,
    l: f64,
    c2: f64,
) -> Threshold {
    if !(beta1 > 0.0) {
        return Threshold::Unbounded;
    }
    let length_term = 4.0 * l * big_m / ((1.0 - c2) * beta1);
    match n1_radius(a, b, beta1, big_m, eps_f, eps_g) {
        Threshold::Finite(r) if length_term.is_finite() => Threshold::Finite(r.max(length_term)),
        _ => Threshold::Unbounded,
    }
}

/// Which way an Armijo-Wolfe step is being transferred between the noisy and
/// the true objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferDirection {
    /// A step satisfying the noisy conditions exists because the true ones are satisfiable.
    NoisyFromTrue,
    /// A step satisfying the noisy conditions also satisfies (relaxed) true conditions.
    TrueFromNoisy,
}

/// Inputs of the transfer thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferInputs {
    pub cos_theta: f64,
    pub cos_theta_tilde: f64,
    pub c1: f64,
    pub c2: f64,
    pub big_m: f64,
    pub eps_f: f64,
    pub eps_g: f64,
}

/// Lower bound on `||grad phi(x_k)||` required by the transfer results with
/// `delta1 = delta2 = (c2 - c1)/4`, `delta1_hat = c1/2`, `delta2_hat = (1 - c2)/2`.
pub fn transfer_threshold(inputs: &TransferInputs, direction: TransferDirection) -> f64 {
    let TransferInputs {
        cos_theta: ct,
        cos_theta_tilde: ctt,
        c1,
        c2,
        big_m,
        eps_f,
        eps_g,
    } = *inputs;
    if eps_f == 0.0 && eps_g == 0.0 {
        return 0.0;
    }
    if !(ct > 0.0 && ctt > 0.0) {
        return f64::INFINITY;
    }
    match direction {
        TransferDirection::NoisyFromTrue => {
            let d1 = (c2 - c1) / 4.0;
            let d2 = (c2 - c1) / 4.0;
            let terms = [
                4.0 * (c1 + d1) * eps_g / (d1 * ct),
                2.0 * (1.0 + c2 - d2) * eps_g / (d2 * ct),
                (16.0 * big_m * eps_f / ((1.0 - c2 + d2) * d1 * ct * ctt)).sqrt(),
            ];
            terms.into_iter().fold(0.0, f64::max)
        }
        TransferDirection::TrueFromNoisy => {
            let d1h = c1 / 2.0;
            let d2h = (1.0 - c2) / 2.0;
            let terms = [
                8.0 * eps_g / ((1.0 - c2) * ct),
                (16.0 * big_m * eps_f / (d1h * (1.0 - c2) * ct * ctt)).sqrt(),
                2.0 * c1 * eps_g / (d1h * ctt),
                (1.0 + c2) * eps_g / (d2h * ctt),
            ];
            terms.into_iter().fold(0.0, f64::max)
        }
    }
}

/// Whether `grad_true_norm` meets [`transfer_threshold`]. Diagnostic only.
pub fn transfer_conditions_hold(grad_true_norm: f64, inputs: &TransferInputs, direction: TransferDirection) -> bool {
    grad_true_norm >= transfer_threshold(inputs, direction)
}

/// One-step decrease bound for a step satisfying the true Armijo-Wolfe conditions:
/// `phi_after - phi_before <= -c1 (1 - c2) / M cos^2 theta ||grad||^2`.
pub fn descent_bound_check(
    phi_before: f64,
    phi_after: f64,
    grad_true_norm: f64,
    cos_theta_tilde: f64,
    c1: f64,
    c2: f64,
    big_m: f64,
) -> bool {
    let bound = -c1 * (1.0 - c2) / big_m * cos_theta_tilde.powi(2) * grad_true_norm.powi(2);
    phi_after - phi_before <= bound + DESCENT_SLACK
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quartiles with linear interpolation between order statistics.
pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let at = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    };
    Some(Quartiles {
        min: v[0],
        q1: at(0.25),
        median: at(0.5),
        q3: at(0.75),
        max: v[v.len() - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodIterateStats {
    pub beta1: f64,
    pub q: f64,
    /// `|J_k|` for `k = 0..=n`, where `J_k` counts `j < k` with `cos theta_j >= beta1`.
    pub good_counts: Vec<usize>,
    /// `|J_k| >= q k` for each `k`.
    pub bound_holds: Vec<bool>,
    pub all_hold: bool,
    pub cos_theta: Option<Quartiles>,
}

pub fn good_iterate_stats(records: &[IterateRecord], beta1: f64, q: f64) -> GoodIterateStats {
    let mut good_counts = Vec::with_capacity(records.len() + 1);
    let mut count = 0;
    good_counts.push(0);
    for r in records {
        if r.cos_theta >= beta1 {
            count += 1;
        }
        good_counts.push(count);
    }
    let bound_holds: Vec<bool> = good_counts
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 >= q * k as f64)
        .collect();
    let cos: Vec<f64> = records.iter().map(|r| r.cos_theta).collect();
    GoodIterateStats {
        beta1,
        q,
        all_hold: bound_holds.iter().all(|&b| b),
        good_counts,
        bound_holds,
        cos_theta: quartiles(&cos),
    }
}

/// Running minimum `xi_k = min_{i <= k} phi_i`.
pub fn envelope_sequence(phi_values: &[f64]) -> Result<Vec<f64>> {
    if phi_values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut out = Vec::with_capacity(phi_values.len());
    let mut cur = f64::INFINITY;
    for &p in phi_values {
        cur = cur.min(p);
        out.push(cur);
    }
    Ok(out)
}

/// Indices `k` with `phi_k > xi_k + 2 eps_f`.
pub fn envelope_violations(phi_values: &[f64], eps_f: f64) -> Result<Vec<usize>> {
    let xi = envelope_sequence(phi_values)?;
    Ok(phi_values
        .iter()
        .zip(&xi)
        .enumerate()
        .filter(|(_, (p, x))| **p > **x + 2.0 * eps_f)
        .map(|(k, _)| k)
        .collect())
}

/// Inputs needed to evaluate every analysis constant for a configuration.
#[derive(Debug, Clone)]
pub struct TheoryInputs {
    pub m: f64,
    pub big_m: f64,
    pub eps_f: f64,
    pub eps_g: f64,
    pub l: f64,
    pub c1: f64,
    pub c2: f64,
    pub q: f64,
    pub h0: SymMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryConstants {
    pub m_hat: f64,
    pub big_m_hat: f64,
    pub q: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub beta1_underflow: bool,
    pub a: f64,
    pub b: f64,
    /// `c1 (1 - c2) beta1^2 / (16 M)`
    pub zeta: f64,
    /// `(1 - m zeta)^q`; exactly 1 when `beta1` underflows.
    pub rho: f64,
    pub n1_radius: Threshold,
    pub lengthening_unneeded_above: Threshold,
}

impl TheoryConstants {
    pub fn compute(inputs: &TheoryInputs) -> Result<Self> {
        let (m_hat, big_m_hat) = lengthening_bounds(inputs.m, inputs.big_m, inputs.eps_g, inputs.l)?;
        let good = good_iterate_constants(inputs.q, &inputs.h0, m_hat, big_m_hat)?;
        let (a, b) = ab_constants(inputs.c1, inputs.c2)?;
        let zeta = inputs.c1 * (1.0 - inputs.c2) * good.beta1 * good.beta1 / (16.0 * inputs.big_m);
        let rho = (1.0 - inputs.m * zeta).powf(inputs.q);
        Ok(TheoryConstants {
            m_hat,
            big_m_hat,
            q: inputs.q,
            beta0: good.beta0,
            beta1: good.beta1,
            beta1_underflow: good.beta1_underflow,
            a,
            b,
            zeta,
            rho,
            n1_radius: n1_radius(a, b, good.beta1, inputs.big_m, inputs.eps_f, inputs.eps_g),
            lengthening_unneeded_above: lengthening_unneeded_threshold(
                a,
                b,
                good.beta1,
                inputs.big_m,
                inputs.eps_f,
                inputs.eps_g,
                inputs.l,
                inputs.c2,
            ),
        })
    }
}

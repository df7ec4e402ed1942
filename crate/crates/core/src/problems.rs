//! True objectives and the bounded-noise oracle the optimizer consumes.
//!
//! Noise is drawn fresh on every call. Each draw `n` of a [`NoiseModel`] comes
//! from its own ChaCha8 stream, keyed by `(seed, n)`, so a draw depends only on
//! the seed and the draw index and replays bit-for-bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, norm2, SymMatrix, Vector};

/// A smooth strongly convex objective with known curvature bounds.
pub trait TrueProblem: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64]) -> Result<Vector>;
    fn hessian(&self, x: &[f64]) -> Result<SymMatrix>;
    /// Known optimal value.
    fn optimal_value(&self) -> f64;
    /// Strong convexity parameter `m`.
    fn strong_convexity(&self) -> f64;
    /// Lipschitz constant `M` of the gradient.
    fn lipschitz(&self) -> f64;
}

/// `phi(x) = x^T T x / 2` with a prescribed spectrum.
#[derive(Debug, Clone)]
pub struct Quadratic {
    t: SymMatrix,
    eigenvalues: Vec<f64>,
}

impl Quadratic {
    pub fn matrix(&self) -> &SymMatrix {
        &self.t
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

/// Builds `phi(x) = x^T T x / 2` where `T = diag(eigenvalues)`, or `R^T D R` for a
/// Haar-random orthogonal `R` when `rotation_seed` is set.
pub fn make_quadratic(d: usize, eigenvalues: &[f64], rotation_seed: Option<u64>) -> Result<Quadratic> {
    if d == 0 || eigenvalues.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: eigenvalues.len(),
        });
    }
    if let Some(bad) = eigenvalues.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        return Err(invalid(format!("eigenvalues must be positive and finite, got {bad}")));
    }
    let t = match rotation_seed {
        None => SymMatrix::from_diag(eigenvalues),
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let basis = linalg::random_orthonormal_basis(d, &mut rng);
            SymMatrix::from_spectrum(eigenvalues, &basis)?
        }
    };
    Ok(Quadratic {
        t,
        eigenvalues: eigenvalues.to_vec(),
    })
}

impl TrueProblem for Quadratic {
    fn dim(&self) -> usize {
        self.t.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let tx = self.t.apply(x)?;
        Ok(0.5 * linalg::dot(x, &tx)?)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vector> {
        self.t.apply(x)
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.t.clone())
    }

    fn optimal_value(&self) -> f64 {
        0.0
    }

    fn strong_convexity(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn lipschitz(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(0.0, f64::max)
    }
}

/// Seeded bounded noise: uniform on `[-eps_f, eps_f]` for function values and
/// uniform on the closed ball of radius `eps_g` for gradients.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    eps_f: f64,
    eps_g: f64,
    seed: u64,
    draws: u64,
}

impl NoiseModel {
    pub fn new(eps_f: f64, eps_g: f64, seed: u64) -> Result<Self> {
        if !(eps_f >= 0.0 && eps_f.is_finite()) || !(eps_g >= 0.0 && eps_g.is_finite()) {
            return Err(invalid(format!(
                "noise bounds must be finite and non-negative (eps_f = {eps_f}, eps_g = {eps_g})"
            )));
        }
        Ok(NoiseModel {
            eps_f,
            eps_g,
            seed,
            draws: 0,
        })
    }

    pub fn noiseless() -> Self {
        NoiseModel {
            eps_f: 0.0,
            eps_g: 0.0,
            seed: 0,
            draws: 0,
        }
    }

    pub fn eps_f(&self) -> f64 {
        self.eps_f
    }

    pub fn eps_g(&self) -> f64 {
        self.eps_g
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of draws made so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    fn next_stream(&mut self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.draws);
        self.draws += 1;
        rng
    }

    pub fn sample_function_noise(&mut self) -> f64 {
        let mut rng = self.next_stream();
        if self.eps_f == 0.0 {
            return 0.0;
        }
        let e = rng.random_range(-self.eps_f..=self.eps_f);
        debug_assert!(e.abs() <= self.eps_f);
        e
    }

    pub fn sample_gradient_noise(&mut self, d: usize) -> Vector {
        let mut rng = self.next_stream();
        if self.eps_g == 0.0 || d == 0 {
            return Vector::zeros(d);
        }
        let mut z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let mut n = norm2(&z);
        while n == 0.0 {
            z = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            n = norm2(&z);
        }
        let u: f64 = rng.random();
        // keep the radius a few ulps inside eps_g so rounding never leaves the ball
        let radius = self.eps_g * u.powf(1.0 / d as f64).min(1.0 - 4.0 * f64::EPSILON);
        let e = Vector::new(z.into_iter().map(|zi| radius * zi / n).collect());
        debug_assert!(norm2(&e) <= self.eps_g);
        e
    }
}

/// Oracle calls made so far.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct CallCounts {
    pub f_evals: u64,
    pub g_evals: u64,
}

/// The only view of the objective the optimizer gets: noisy values and gradients.
pub trait NoisyObjective {
    fn dim(&self) -> usize;
    fn f(&mut self, x: &[f64]) -> Result<f64>;
    fn g(&mut self, x: &[f64]) -> Result<Vector>;
    fn calls(&self) -> CallCounts;
}

/// `f = phi + eps`, `g = grad phi + e` with noise from a [`NoiseModel`].
pub struct NoisyOracle<'p> {
    problem: &'p dyn TrueProblem,
    noise: NoiseModel,
    calls: CallCounts,
}

impl<'p> NoisyOracle<'p> {
    pub fn new(problem: &'p dyn TrueProblem, noise: NoiseModel) -> Self {
        NoisyOracle {
            problem,
            noise,
            calls: CallCounts::default(),
        }
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn problem(&self) -> &'p dyn TrueProblem {
        self.problem
    }
}

impl NoisyObjective for NoisyOracle<'_> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn f(&mut self, x: &[f64]) -> Result<f64> {
        let phi = self.problem.value(x)?;
        self.calls.f_evals += 1;
        Ok(phi + self.noise.sample_function_noise())
    }

    fn g(&mut self, x: &[f64]) -> Result<Vector> {
        let grad = self.problem.gradient(x)?;
        self.calls.g_evals += 1;
        let e = self.noise.sample_gradient_noise(grad.dim());
        grad.add(&e)
    }

    fn calls(&self) -> CallCounts {
        self.calls
    }
}

//! Small dense real linear algebra: vectors, structurally symmetric matrices,
//! a cyclic Jacobi eigensolver and functions built on it.
//!
//! Everything here targets dimensions up to a few dozen. Symmetric matrices
//! store only the upper triangle, so `A[i][j] == A[j][i]` holds by
//! construction.

use std::ops::{Deref, Index};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Default tolerance for the Jacobi eigensolver.
pub const JACOBI_TOL: f64 = 1e-12;
/// Sweep budget for the Jacobi eigensolver.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense real vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Self {
        Vector(entries)
    }

    pub fn zeros(d: usize) -> Self {
        Vector(vec![0.0; d])
    }

    pub fn filled(d: usize, value: f64) -> Self {
        Vector(vec![value; d])
    }

    /// i-th standard basis vector.
    pub fn unit(d: usize, i: usize) -> Self {
        let mut v = Self::zeros(d);
        v.0[i] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Vector {
        Vector(self.0.iter().map(|v| a * v).collect())
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &Vector) -> Result<Vector> {
        check_dims(self.dim(), other.dim())?;
        Ok(Vector(
            self.0.iter().zip(&other.0).map(|(x, y)| x + a * y).collect(),
        ))
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        self.axpy(1.0, other)
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Vector(v.to_vec())
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
}

pub fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine of the angle between `a` and `b`; `None` when either is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    let denom = norm2(a) * norm2(b);
    let num = dot(a, b)?;
    if denom == 0.0 || !denom.is_finite() {
        return Ok(None);
    }
    Ok(Some((num / denom).clamp(-1.0, 1.0)))
}

/// Real symmetric matrix stored as a packed upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    packed: Vec<f64>,
}

#[inline]
fn packed_index(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * (2 * d - i - 1) / 2 + j
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            packed: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut packed = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                packed.push(f(i, j));
            }
        }
        SymMatrix { dim, packed }
    }

    /// Builds from full rows; rejects input that is not exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        for (i, row) in rows.iter().enumerate() {
            check_dims(d, row.len())?;
            for j in 0..i {
                if row[j] != rows[j][i] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self::from_upper_fn(d, |i, j| rows[i][j]))
    }

    /// `sum_i weights[i] * basis[i] basis[i]^T` for a list of vectors.
    pub fn from_spectrum(weights: &[f64], basis: &[Vector]) -> Result<Self> {
        check_dims(weights.len(), basis.len())?;
        let d = basis.first().map_or(0, |b| b.dim());
        for b in basis {
            check_dims(d, b.dim())?;
        }
        Ok(Self::from_upper_fn(d, |i, j| {
            weights
                .iter()
                .zip(basis)
                .map(|(w, b)| w * b[i] * b[j])
                .sum()
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(self.dim, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = packed_index(self.dim, i, j);
        self.packed[k] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.packed.iter().all(|v| v.is_finite())
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn scaled(&self, a: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            packed: self.packed.iter().map(|v| a * v).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.get(i, j);
                acc += v * v;
            }
        }
        acc.sqrt()
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &SymMatrix) -> Result<f64> {
        check_dims(self.dim, other.dim)?;
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.get(i, j) - other.get(i, j);
                acc += v * v;
            }
        }
        Ok(acc.sqrt())
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vector> {
        check_dims(self.dim, v.len())?;
        Ok(Vector(
            (0..self.dim)
                .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
                .collect(),
        ))
    }

    /// `self * other * self` for symmetric `self`, returned as a symmetric matrix.
    pub fn sandwich(&self, other: &SymMatrix) -> Result<SymMatrix> {
        check_dims(self.dim, other.dim)?;
        let d = self.dim;
        // B = other * self, then C = self * B, keep the upper triangle.
        let mut b = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                b[i * d + j] = (0..d).map(|k| other.get(i, k) * self.get(k, j)).sum();
            }
        }
        Ok(Self::from_upper_fn(d, |i, j| {
            (0..d).map(|k| self.get(i, k) * b[k * d + j]).sum()
        }))
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.packed[packed_index(self.dim, i, j)]
    }
}

/// Eigen-decomposition `A = V diag(values) V^T` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, `vectors[i]` belongs to `values[i]`.
    pub vectors: Vec<Vector>,
    pub sweeps: usize,
}

/// Cyclic Jacobi eigensolver.
///
/// Iterates full sweeps of plane rotations until the off-diagonal Frobenius
/// mass drops below `tol * ||A||_F`, giving up after [`JACOBI_MAX_SWEEPS`].
pub fn jacobi_eigen(a: &SymMatrix, tol: f64) -> Result<SymEigen> {
    if !(tol > 0.0) {
        return Err(crate::error::invalid(format!("Jacobi tolerance must be positive, got {tol}")));
    }
    let n = a.dim();
    let mut m = a.to_rows();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale = a.frobenius_norm();

    let off = |m: &Vec<Vec<f64>>| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += m[i][j] * m[i][j];
                }
            }
        }
        acc.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let mass = off(&m);
        if mass <= tol * scale {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_diagonal: mass,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in m.iter_mut() {
                    let (mkp, mkq) = (row[p], row[q]);
                    row[p] = c * mkp - s * mkq;
                    row[q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                m[p][q] = 0.0;
                m[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| Vector((0..n).map(|k| v[k][i]).collect()))
        .collect();
    Ok(SymEigen {
        values,
        vectors,
        sweeps,
    })
}

/// Eigenvalues in ascending order.
pub fn jacobi_eigenvalues(a: &SymMatrix, tol: f64) -> Result<Vec<f64>> {
    Ok(jacobi_eigen(a, tol)?.values)
}

/// Principal square root `V diag(sqrt(lambda)) V^T` of a positive definite matrix.
pub fn sym_sqrt(a: &SymMatrix, tol: f64) -> Result<SymMatrix> {
    let eig = jacobi_eigen(a, tol)?;
    let min = eig.values.first().copied().unwrap_or(f64::INFINITY);
    if !(min > tol) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min,
        });
    }
    let roots: Vec<f64> = eig.values.iter().map(|l| l.sqrt()).collect();
    SymMatrix::from_spectrum(&roots, &eig.vectors)
}

/// `lambda_max / lambda_min` of a positive definite matrix.
pub fn condition_number(a: &SymMatrix, tol: f64) -> Result<f64> {
    let values = jacobi_eigenvalues(a, tol)?;
    let (min, max) = match (values.first(), values.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(Error::EmptyInput),
    };
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min,
        });
    }
    Ok(max / min)
}

/// Haar-distributed orthonormal basis from Gram-Schmidt on a Gaussian matrix.
pub fn random_orthonormal_basis<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Vector> {
    let mut basis: Vec<Vector> = Vec::with_capacity(d);
    while basis.len() < d {
        let mut w: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let proj: f64 = w.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
                for (wi, bi) in w.iter_mut().zip(b.iter()) {
                    *wi -= proj * bi;
                }
            }
        }
        let n = norm2(&w);
        if n < 1e-8 {
            continue;
        }
        basis.push(Vector(w.into_iter().map(|x| x / n).collect()));
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> Vector {
        Vector::from(x)
    }

    #[test]
    fn dot_examples() {
        assert_eq!(dot(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(dot(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(dot(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap(), 32.0);
        assert!(matches!(
            dot(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(norm2(&[0.0, 0.0]), 0.0);
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
        let t = SymMatrix::from_diag(&[1e-2, 1.0, 1e2, 1e4]);
        let g = t.apply(&Vector::filled(4, 1e5)).unwrap();
        let n = norm2(&g);
        let exact = (1e18f64 + 1e14 + 1e10 + 1e6).sqrt();
        assert!((n / exact - 1.0).abs() < 1e-15, "{n}");
    }

    #[test]
    fn apply_examples() {
        let x = v(&[0.3, -2.0, 7.5]);
        assert_eq!(SymMatrix::identity(3).apply(&x).unwrap(), x);
        assert_eq!(
            SymMatrix::from_diag(&[2.0, 3.0]).apply(&[1.0, 1.0]).unwrap(),
            v(&[2.0, 3.0])
        );
        let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(a.apply(&[1.0, 0.0]).unwrap(), v(&[2.0, 1.0]));
        assert!(a.apply(&[1.0]).is_err());
    }

    #[test]
    fn packed_storage_is_symmetric() {
        let mut a = SymMatrix::zeros(3);
        a.set(2, 0, 5.0);
        assert_eq!(a.get(0, 2), 5.0);
        assert_eq!(a[(2, 0)], a[(0, 2)]);
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.5, 1.0]]).is_err());
    }

    #[test]
    fn eigenvalue_examples() {
        let a = SymMatrix::from_diag(&[5.0, 1.0, 3.0]);
        assert_eq!(jacobi_eigenvalues(&a, JACOBI_TOL).unwrap(), vec![1.0, 3.0, 5.0]);
        assert_eq!(
            jacobi_eigenvalues(&SymMatrix::identity(4), JACOBI_TOL).unwrap(),
            vec![1.0; 4]
        );
        let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let ev = jacobi_eigenvalues(&a, JACOBI_TOL).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14, "{ev:?}");
    }

    #[test]
    fn eigenvectors_reconstruct_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let basis = random_orthonormal_basis(5, &mut rng);
        let a = SymMatrix::from_spectrum(&[-2.0, 0.5, 1.0, 4.0, 9.0], &basis).unwrap();
        let eig = jacobi_eigen(&a, JACOBI_TOL).unwrap();
        let back = SymMatrix::from_spectrum(&eig.values, &eig.vectors).unwrap();
        assert!(back.frobenius_distance(&a).unwrap() < 1e-12 * a.frobenius_norm());
    }

    #[test]
    fn jacobi_rejects_bad_tolerance() {
        assert!(jacobi_eigenvalues(&SymMatrix::identity(2), 0.0).is_err());
    }

    #[test]
    fn sqrt_examples() {
        assert_eq!(
            sym_sqrt(&SymMatrix::identity(3), JACOBI_TOL).unwrap(),
            SymMatrix::identity(3)
        );
        let s = sym_sqrt(&SymMatrix::from_diag(&[4.0, 9.0]), JACOBI_TOL).unwrap();
        assert_eq!(s, SymMatrix::from_diag(&[2.0, 3.0]));
        let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let s = sym_sqrt(&a, JACOBI_TOL).unwrap();
        let sq = s.sandwich(&SymMatrix::identity(2)).unwrap();
        assert!(sq.frobenius_distance(&a).unwrap() <= 10.0 * JACOBI_TOL * a.frobenius_norm());
        let indefinite = SymMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(
            sym_sqrt(&indefinite, JACOBI_TOL),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn condition_number_examples() {
        assert_eq!(condition_number(&SymMatrix::identity(4), JACOBI_TOL).unwrap(), 1.0);
        let t = SymMatrix::from_diag(&[1e-2, 1.0, 1e2, 1e4]);
        assert!((condition_number(&t, JACOBI_TOL).unwrap() - 1e6).abs() < 1e-6);
        let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!((condition_number(&a, JACOBI_TOL).unwrap() - 3.0).abs() < 1e-13);
        assert!(condition_number(&SymMatrix::from_diag(&[0.0, 1.0]), JACOBI_TOL).is_err());
    }

    #[test]
    fn orthonormal_basis_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = random_orthonormal_basis(6, &mut rng);
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&b[i], &b[j]).unwrap() - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cosine_of_zero_vector_is_none() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), None);
        assert_eq!(cosine(&[2.0, 0.0], &[-1.0, 0.0]).unwrap(), Some(-1.0));
    }
}

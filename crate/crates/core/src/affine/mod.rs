//! The affine group of `V` and its action on `V × V* × ℝ` and on jets.
//!
//! An element `(A, B)` acts by `(x, u, λ) ↦ (Ax + B, u, A^{-T} λ)`, preserving
//! both `θ = du − λ_i dx^i` and `ω = dλ_i ∧ dx^i`. Infinitesimally the
//! action is generated by affine vector fields `a^i(x) ∂_{x^i}`, whose
//! prolongations to jet space drive the orbit counting in [`counting`].

pub mod counting;
mod prolong;

pub use counting::{
    affine_generators, dim_e, dim_jet_space, hilbert, orbit_codimension, orbit_codimension_at,
    orbit_rank_at, poincare_coefficients, poincare_numerator, ORBIT_RANK_TOL,
};
pub use prolong::{lie_derivative_sigma2, prolong, FunctionJetPoint, PolyVectorField, ProlongedVector, Prolongation};

use rand::Rng;
use thiserror::Error;

use crate::jets::JetError;
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AffineError {
    #[error("matrix is singular (det = {0})")]
    SingularMatrix(f64),
    #[error("jet order {found} is too low; need at least {needed}")]
    InsufficientJetOrder { needed: usize, found: usize },
    #[error("vector field is not polynomial in x1..xn: {0}")]
    NotPolynomial(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("sample point stays rank-deficient after {attempts} resamples")]
    DegenerateSamplePoint { attempts: usize },
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// `x ↦ A x + B` with `det A ≠ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineElement {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

/// A point `(x, u, λ)` of `V × ℝ × V*`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactPoint {
    pub x: Vec<f64>,
    pub u: f64,
    pub lambda: Vec<f64>,
}

impl AffineElement {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self, AffineError> {
        let n = b.len();
        if a.len() != n || a.iter().any(|r| r.len() != n) {
            return Err(AffineError::DimensionMismatch { expected: n, found: a.len() });
        }
        let d = linalg::det(&a);
        let scale: f64 = a.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
        if d.abs() <= 1e-12 * scale.powi(n as i32) {
            return Err(AffineError::SingularMatrix(d));
        }
        Ok(Self { a, b })
    }

    pub fn identity(n: usize) -> Self {
        let a = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self { a, b: vec![0.0; n] }
    }

    /// A well-conditioned random element: `A = I + M/2` with `M` uniform in
    /// `[-1, 1]`, resampled until `|det A| ≥ 0.25`; `B` uniform in `[-1, 1]`.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        loop {
            let a: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 } + 0.5 * rng.random_range(-1.0..1.0)).collect())
                .collect();
            if linalg::det(&a).abs() >= 0.25 {
                let b = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                return Self { a, b };
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn translation(&self) -> &[f64] {
        &self.b
    }

    /// `(A^{-1})ᵀ`, the action on covectors.
    pub fn inverse_transpose(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let id: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        // columns of A^{-1}
        let inv_cols = linalg::solve_many(&self.a, &id).expect("AffineElement holds an invertible matrix");
        // (A^{-1})ᵀ[i][j] = A^{-1}[j][i] = inv_cols[i][j]
        inv_cols
    }

    /// `g·h`, acting as `x ↦ g(h(x))`.
    pub fn compose(&self, h: &Self) -> Self {
        let n = self.dim();
        let a = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| self.a[i][k] * h.a[k][j]).sum()).collect())
            .collect();
        let b = (0..n).map(|i| (0..n).map(|k| self.a[i][k] * h.b[k]).sum::<f64>() + self.b[i]).collect();
        Self { a, b }
    }

    /// `x ↦ A^{-1}(x − B)`.
    pub fn inverse(&self) -> Self {
        let n = self.dim();
        let inv_t = self.inverse_transpose();
        let a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| inv_t[j][i]).collect()).collect();
        let b = linalg::mat_vec(&a, &self.b).iter().map(|v| -v).collect();
        Self { a, b }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.a, x).iter().zip(&self.b).map(|(y, b)| y + b).collect()
    }

    pub fn apply_covector(&self, lambda: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.inverse_transpose(), lambda)
    }

    /// `(x, u, λ) ↦ (Ax + B, u, A^{-T} λ)`.
    pub fn lift_contact(&self, p: &ContactPoint) -> ContactPoint {
        ContactPoint { x: self.apply(&p.x), u: p.u, lambda: self.apply_covector(&p.lambda) }
    }

    /// Tangent map of the lift: `(δx, δu, δλ) ↦ (A δx, δu, A^{-T} δλ)`.
    pub fn lift_tangent(&self, dx: &[f64], du: f64, dlambda: &[f64]) -> (Vec<f64>, f64, Vec<f64>) {
        (linalg::mat_vec(&self.a, dx), du, self.apply_covector(dlambda))
    }
}

/// `ω = dλ_i ∧ dx^i` and `θ = du − λ_i dx^i` on `V × V* × ℝ` in dimension `n`:
/// both pair the x-slot and λ-slot with the identity matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CanonicalStructures {
    pub n: usize,
}

impl CanonicalStructures {
    /// `θ` at a point with covector `λ`, evaluated on a tangent vector.
    pub fn theta(&self, lambda: &[f64], dx: &[f64], du: f64) -> f64 {
        du - (0..self.n).map(|i| lambda[i] * dx[i]).sum::<f64>()
    }

    /// `ω((δx, δλ), (δx', δλ'))`.
    pub fn omega(&self, v: (&[f64], &[f64]), w: (&[f64], &[f64])) -> f64 {
        (0..self.n).map(|i| v.1[i] * w.0[i] - w.1[i] * v.0[i]).sum()
    }
}

//! The scalar ring every pipeline in this crate is written against.
//!
//! Plain `f64` is the everyday instance. [`TruncatedSeries`](crate::jets::TruncatedSeries)
//! is the other one: running a pipeline over series scalars carries exact
//! derivatives through it (forward mode), which is how invariant derivatives
//! and Jacobians are obtained without symbolic algebra.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A commutative division ring with the transcendental functions the
/// expression language needs.
///
/// `value` is the "constant part" of a scalar: the number itself for `f64`,
/// the coefficient of the empty multi-index for a series. Pivoting, sign and
/// singularity checks look only at it.
pub trait Scalar:
    Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A constant living in the same ring as `self` (same layout for series).
    fn constant_like(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn recip(&self) -> Self;

    fn zero_like(&self) -> Self {
        self.constant_like(0.0)
    }

    fn scale(&self, c: f64) -> Self {
        self.clone() * self.constant_like(c)
    }

    fn powi(&self, k: i32) -> Self {
        if k < 0 {
            return self.powi(-k).recip();
        }
        let mut acc = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    /// `self^q` as `exp(q ln self)`; only meaningful for positive constant part.
    fn powf(&self, q: f64) -> Self {
        self.ln().scale(q).exp()
    }
}

impl Scalar for f64 {
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn recip(&self) -> Self {
        1.0 / *self
    }
    fn scale(&self, c: f64) -> Self {
        *self * c
    }
    fn powi(&self, k: i32) -> Self {
        f64::powi(*self, k)
    }
    fn powf(&self, q: f64) -> Self {
        f64::powf(*self, q)
    }
}

/// Sum of a slice of scalars; `proto` supplies the ring for the empty sum.
pub fn sum<S: Scalar>(proto: &S, items: impl IntoIterator<Item = S>) -> S {
    items.into_iter().fold(proto.zero_like(), |acc, x| acc + x)
}

/// Euclidean inner product.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    assert_eq!(a.len(), b.len(), "dot: length mismatch");
    assert!(!a.is_empty(), "dot: empty vectors");
    sum(&a[0], a.iter().zip(b).map(|(x, y)| x.clone() * y.clone()))
}

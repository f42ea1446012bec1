//! Exponential families over a finite sample space.
//!
//! A [`FiniteEnsemble`] is a base measure `μ₀ = Σ p_ω δ_{x_ω}` on `V`. Tilting
//! by `e^{⟨λ, x⟩}` gives the measure of minimal information gain with mean
//! `x(λ) = −∇H(λ)`, `H = −ln Z`. Moments are available three ways: as
//! weighted sums, as derivatives of the `Z`-jet, and by Monte Carlo.

mod sample;

pub use sample::{sample_central_moment, SampleEstimate};

use thiserror::Error;

use crate::affine::AffineElement;
use crate::jets::{binomial, MultiIndex, SeriesLayout, TruncatedSeries};
use crate::scalar::Scalar;
use crate::tensor::SymTensor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpfamError {
    #[error("an ensemble needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("weight {index} is not a positive finite number: {value}")]
    BadWeight { index: usize, value: f64 },
    #[error("weights sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, found: usize },
    #[error("point {index} has a non-finite coordinate")]
    NonFinitePoint { index: usize },
    #[error("moment list entry {index} has degree {found}, expected {expected}")]
    DegreeMismatch { index: usize, expected: usize, found: usize },
    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
}

/// Points `x_ω ∈ ℝⁿ` with positive weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteEnsemble {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl FiniteEnsemble {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self, ExpfamError> {
        Self::validate(&points, &weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ExpfamError::NotNormalized(total));
        }
        Ok(Self { points, weights })
    }

    /// Like [`new`](Self::new) but rescales the weights to sum to one.
    pub fn normalized(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self, ExpfamError> {
        Self::validate(&points, &weights)?;
        let total: f64 = weights.iter().sum();
        Ok(Self { points, weights: weights.iter().map(|w| w / total).collect() })
    }

    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self, ExpfamError> {
        let w = vec![1.0; points.len()];
        Self::normalized(points, w)
    }

    /// `{0, 1}` with equal weights.
    pub fn bernoulli() -> Self {
        Self { points: vec![vec![0.0], vec![1.0]], weights: vec![0.5, 0.5] }
    }

    fn validate(points: &[Vec<f64>], weights: &[f64]) -> Result<(), ExpfamError> {
        if points.len() < 2 || weights.len() != points.len() {
            return Err(ExpfamError::TooFewPoints(points.len().min(weights.len())));
        }
        let n = points[0].len();
        for (index, p) in points.iter().enumerate() {
            if p.len() != n || n == 0 {
                return Err(ExpfamError::DimensionMismatch { index, expected: n.max(1), found: p.len() });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(ExpfamError::NonFinitePoint { index });
            }
        }
        for (index, &w) in weights.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                return Err(ExpfamError::BadWeight { index, value: w });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Pushes every point through `x ↦ Ax + B`.
    pub fn transform(&self, g: &AffineElement) -> Self {
        Self { points: self.points.iter().map(|p| g.apply(p)).collect(), weights: self.weights.clone() }
    }

    /// Whether the points affinely span `ℝⁿ`.
    pub fn affinely_spans(&self) -> bool {
        let base = &self.points[0];
        let rows: Vec<Vec<f64>> =
            self.points[1..].iter().map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect()).collect();
        crate::linalg::numerical_rank(&rows, 1e-10) == self.dim()
    }

    /// Weights of the tilted measure, `ρ_ω p_ω` with `ρ_ω = e^{⟨λ, x_ω⟩}/Z`.
    pub fn tilted_weights(&self, lambda: &[f64]) -> Vec<f64> {
        let logs: Vec<f64> = self.points.iter().map(|p| dot(lambda, p)).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = logs.iter().zip(&self.weights).map(|(l, w)| w * (l - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|r| r / total).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jet of `Z(λ) = Σ p_ω e^{⟨λ, x_ω⟩}` at `λ` through order `K`.
pub fn partition(ens: &FiniteEnsemble, lambda: &[f64], order: usize) -> TruncatedSeries {
    partition_shifted(ens, lambda, order, 0.0)
}

/// `H = −ln Z` as a jet, and the mean `x = −∇H` at `λ`.
///
/// `Z` is formed relative to the largest exponent so that `ln` never sees an
/// overflowing constant term.
pub fn potential_and_mean(ens: &FiniteEnsemble, lambda: &[f64], order: usize) -> (TruncatedSeries, Vec<f64>) {
    let top = ens.points.iter().map(|p| dot(lambda, p)).fold(f64::NEG_INFINITY, f64::max);
    let z_scaled = partition_shifted(ens, lambda, order.max(1), top);
    let h_full = -(z_scaled.ln() + z_scaled.constant_like(top));
    let x = h_full.gradient().iter().map(|g| -g).collect();
    let h = if order == 0 { h_full.truncate_into(&SeriesLayout::new(ens.dim(), 0)) } else { h_full };
    (h, x)
}

/// `I = H(λ) + ⟨λ, x(λ)⟩`.
pub fn info_gain(ens: &FiniteEnsemble, lambda: &[f64]) -> f64 {
    let (h, x) = potential_and_mean(ens, lambda, 1);
    // guard tiny negative round-off at λ = 0
    (h.constant_term() + dot(lambda, &x)).max(0.0)
}

/// `Σ ρ_ω p_ω ln ρ_ω`, the information gain summed directly.
pub fn info_gain_direct(ens: &FiniteEnsemble, lambda: &[f64]) -> f64 {
    ens.tilted_weights(lambda)
        .iter()
        .zip(&ens.weights)
        .map(|(q, p)| q * (q / p).ln())
        .sum()
}

/// `m_k` with components `Z_{λ_J}/Z`.
pub fn moment(ens: &FiniteEnsemble, lambda: &[f64], k: usize) -> SymTensor {
    // Z is taken relative to e^{top}; the factor cancels in Z_J / Z
    let top = ens.points.iter().map(|p| dot(lambda, p)).fold(f64::NEG_INFINITY, f64::max);
    let z = partition_shifted(ens, lambda, k, top);
    let z0 = *z.constant_term();
    SymTensor::from_fn(ens.dim(), k, |j| z.derivative(j).unwrap() / z0)
}

fn partition_shifted(ens: &FiniteEnsemble, lambda: &[f64], order: usize, shift: f64) -> TruncatedSeries {
    let layout = SeriesLayout::new(ens.dim(), order);
    let coeffs = layout
        .monomials()
        .iter()
        .map(|m| {
            let mf = m.factorial();
            ens.points
                .iter()
                .zip(&ens.weights)
                .map(|(p, w)| w * (dot(lambda, p) - shift).exp() * m.monomial(p) / mf)
                .sum()
        })
        .collect();
    TruncatedSeries::from_coeffs(&layout, lambda, coeffs)
}

/// `m_k` as the weighted sum `Σ ρ_ω p_ω x_ω^{⊗k}`.
pub fn moment_direct(ens: &FiniteEnsemble, lambda: &[f64], k: usize) -> SymTensor {
    let q = ens.tilted_weights(lambda);
    SymTensor::from_fn(ens.dim(), k, |j| ens.points.iter().zip(&q).map(|(p, w)| w * j.monomial(p)).sum())
}

/// `σ_k = Σ_i (−1)^{k−i} C(k,i) m_i ⊙ m_1^{⊗(k−i)}` from `m_1, …, m_k`.
///
/// `⊙` is the normalized symmetric product, which makes this equal to
/// `E[(X − m_1)^{⊗k}]`.
pub fn central_moment<S: Scalar>(moments: &[SymTensor<S>]) -> Result<SymTensor<S>, ExpfamError> {
    let k = moments.len();
    if k == 0 {
        return Err(ExpfamError::DegreeMismatch { index: 0, expected: 1, found: 0 });
    }
    for (index, m) in moments.iter().enumerate() {
        if m.degree() != index + 1 || m.dim() != moments[0].dim() {
            return Err(ExpfamError::DegreeMismatch { index, expected: index + 1, found: m.degree() });
        }
    }
    let n = moments[0].dim();
    let proto = moments[0].get(&MultiIndex::unit(n, 0)).clone();
    let mean = &moments[0];
    // powers[j] = m_1^{⊗j}
    let mut powers = vec![SymTensor::scalar(n, proto.constant_like(1.0))];
    for j in 1..=k {
        let next = powers[j - 1].sym_product(mean);
        powers.push(next);
    }
    let mut acc = SymTensor::zeros(&proto, n, k);
    for i in 0..=k {
        let sign = if (k - i) % 2 == 0 { 1.0 } else { -1.0 };
        let term = if i == 0 { powers[k].clone() } else { moments[i - 1].sym_product(&powers[k - i]) };
        acc = acc.add(&term.scaled(sign * binomial(k as u32, i as u32)));
    }
    Ok(acc)
}

/// `E_ρ[(X − m_1)^{⊗k}]` summed over the points.
pub fn central_moment_direct(ens: &FiniteEnsemble, lambda: &[f64], k: usize) -> SymTensor {
    let q = ens.tilted_weights(lambda);
    let n = ens.dim();
    let mean: Vec<f64> = (0..n).map(|i| ens.points.iter().zip(&q).map(|(p, w)| w * p[i]).sum()).collect();
    let centered: Vec<Vec<f64>> = ens.points.iter().map(|p| p.iter().zip(&mean).map(|(a, b)| a - b).collect()).collect();
    SymTensor::from_fn(n, k, |j| centered.iter().zip(&q).map(|(c, w)| w * j.monomial(c)).sum())
}

/// `m_1, …, m_k` from the `Z`-jet, ready for [`central_moment`].
pub fn moments_up_to(ens: &FiniteEnsemble, lambda: &[f64], k: usize) -> Vec<SymTensor> {
    (1..=k).map(|d| moment(ens, lambda, d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn three_point() -> FiniteEnsemble {
        FiniteEnsemble::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn validation() {
        assert!(matches!(FiniteEnsemble::new(vec![vec![1.0]], vec![1.0]), Err(ExpfamError::TooFewPoints(1))));
        assert!(matches!(
            FiniteEnsemble::new(vec![vec![1.0], vec![2.0]], vec![0.5, 0.6]),
            Err(ExpfamError::NotNormalized(_))
        ));
        assert!(matches!(
            FiniteEnsemble::new(vec![vec![1.0], vec![2.0]], vec![1.5, -0.5]),
            Err(ExpfamError::BadWeight { index: 1, .. })
        ));
        assert!(matches!(
            FiniteEnsemble::new(vec![vec![1.0], vec![2.0, 0.0]], vec![0.5, 0.5]),
            Err(ExpfamError::DimensionMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn bernoulli_partition_and_mean() {
        let b = FiniteEnsemble::bernoulli();
        assert!((partition(&b, &[0.0], 2).constant_term() - 1.0).abs() < 1e-15);
        assert!((partition(&b, &[LN2], 2).constant_term() - 1.5).abs() < 1e-15);
        let (_, x0) = potential_and_mean(&b, &[0.0], 2);
        assert!((x0[0] - 0.5).abs() < 1e-15);
        let (_, x) = potential_and_mean(&b, &[LN2], 2);
        assert!((x[0] - 2.0 / 3.0).abs() < 1e-15);
        let (_, m) = potential_and_mean(&three_point(), &[0.0, 0.0], 1);
        assert!((m[0] - 1.0 / 3.0).abs() < 1e-15 && (m[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn information_gain() {
        let b = FiniteEnsemble::bernoulli();
        assert_eq!(info_gain(&b, &[0.0]), 0.0);
        let expect = (2.0 / 3.0) * (4.0f64 / 3.0).ln() + (1.0 / 3.0) * (2.0f64 / 3.0).ln();
        assert!((info_gain(&b, &[LN2]) - expect).abs() < 1e-15);
        assert!((info_gain(&b, &[-LN2]) - expect).abs() < 1e-15);
        assert!((info_gain_direct(&b, &[LN2]) - expect).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_moments() {
        let b = FiniteEnsemble::bernoulli();
        assert!((moment(&b, &[0.0], 1).component(&[0]) - 0.5).abs() < 1e-15);
        assert!((moment(&b, &[LN2], 2).component(&[0, 0]) - 2.0 / 3.0).abs() < 1e-15);
        let ms = moments_up_to(&b, &[LN2], 4);
        let want = [0.0, 2.0 / 9.0, -2.0 / 27.0, 2.0 / 27.0];
        for k in 1..=4 {
            let s = central_moment(&ms[..k]).unwrap();
            assert!((s.component(&vec![0; k]) - want[k - 1]).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn three_point_second_moment() {
        let m = moment(&three_point(), &[0.0, 0.0], 2);
        assert!((m.component(&[0, 0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!(m.component(&[0, 1]).abs() < 1e-15);
    }

    #[test]
    fn degree_mismatch() {
        let ms = moments_up_to(&three_point(), &[0.1, 0.2], 3);
        let bad = vec![ms[0].clone(), ms[2].clone()];
        assert!(matches!(central_moment(&bad), Err(ExpfamError::DegreeMismatch { index: 1, .. })));
    }

    #[test]
    fn large_lambda_does_not_overflow() {
        let b = FiniteEnsemble::bernoulli();
        let (h, x) = potential_and_mean(&b, &[800.0], 3);
        assert!(h.constant_term().is_finite());
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!(moment(&b, &[800.0], 2).component(&[0, 0]).is_finite());
    }
}

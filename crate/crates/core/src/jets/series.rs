use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use super::{JetError, MultiIndex};
use crate::scalar::Scalar;

/// Dense monomial layout for series in `nvars` variables truncated at `order`.
///
/// Monomials are stored in graded lexicographic order: by total degree, and
/// within a degree lexicographically descending (`x1^2, x1 x2, x2^2, ...`).
/// The product table lists every pair of monomials whose product survives
/// truncation, so multiplication is a single pass over it.
pub struct SeriesLayout {
    nvars: usize,
    order: usize,
    monomials: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
    degree_start: Vec<usize>,
    mul_pairs: Vec<(u32, u32, u32)>,
}

impl SeriesLayout {
    pub fn new(nvars: usize, order: usize) -> Arc<Self> {
        let mut monomials = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for d in 0..=order {
            degree_start.push(monomials.len());
            push_degree(nvars, d as u32, &mut Vec::with_capacity(nvars), &mut monomials);
        }
        degree_start.push(monomials.len());
        let index: HashMap<MultiIndex, usize> =
            monomials.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let mut mul_pairs = Vec::new();
        for (ia, a) in monomials.iter().enumerate() {
            let da = a.order() as usize;
            for (ib, b) in monomials[..degree_start[order - da + 1]].iter().enumerate() {
                let ic = index[&a.add(b)];
                mul_pairs.push((ia as u32, ib as u32, ic as u32));
            }
        }
        Arc::new(Self { nvars, order, monomials, index, degree_start, mul_pairs })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monomials
    }

    pub fn monomial(&self, idx: usize) -> &MultiIndex {
        &self.monomials[idx]
    }

    pub fn index_of(&self, m: &MultiIndex) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Index range of the monomials of exact degree `d`.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_start[d]..self.degree_start[d + 1]
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.order == other.order
    }
}

impl fmt::Debug for SeriesLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeriesLayout")
            .field("nvars", &self.nvars)
            .field("order", &self.order)
            .field("len", &self.monomials.len())
            .finish()
    }
}

fn push_degree(nvars: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if prefix.len() + 1 == nvars {
        prefix.push(d);
        out.push(MultiIndex::new(prefix.clone()));
        prefix.pop();
        return;
    }
    if nvars == 0 {
        if d == 0 {
            out.push(MultiIndex::new(Vec::new()));
        }
        return;
    }
    for first in (0..=d).rev() {
        prefix.push(first);
        push_degree(nvars, d - first, prefix, out);
        prefix.pop();
    }
}

/// Taylor coefficients `∂^J f(a) / J!` of a scalar function at a basepoint `a`,
/// for every multi-index of order at most `K`.
///
/// Coefficients are generic over the [`Scalar`] ring so that series of series
/// (derivatives of jets with respect to parameters) reuse the same arithmetic.
#[derive(Clone)]
pub struct TruncatedSeries<S = f64> {
    layout: Arc<SeriesLayout>,
    basepoint: Arc<[f64]>,
    coeffs: Vec<S>,
}

impl<S: fmt::Debug> fmt::Debug for TruncatedSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TruncatedSeries")
            .field("nvars", &self.layout.nvars)
            .field("order", &self.layout.order)
            .field("basepoint", &self.basepoint)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl TruncatedSeries<f64> {
    pub fn constant(layout: &Arc<SeriesLayout>, basepoint: &[f64], c: f64) -> Self {
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = c;
        Self { layout: layout.clone(), basepoint: basepoint.into(), coeffs }
    }

    /// The coordinate function `y_i` expanded at the basepoint: `a_i + δ_i`.
    pub fn variable(layout: &Arc<SeriesLayout>, basepoint: &[f64], i: usize) -> Self {
        let mut s = Self::constant(layout, basepoint, basepoint[i]);
        if layout.order >= 1 {
            let idx = layout.index_of(&MultiIndex::unit(layout.nvars, i)).expect("unit monomial");
            s.coeffs[idx] = 1.0;
        }
        s
    }

    /// All coordinate functions at once.
    pub fn variables(nvars: usize, order: usize, basepoint: &[f64]) -> Vec<Self> {
        assert_eq!(basepoint.len(), nvars, "basepoint dimension");
        let layout = SeriesLayout::new(nvars, order);
        (0..nvars).map(|i| Self::variable(&layout, basepoint, i)).collect()
    }

    /// A polynomial given by raw partial derivatives `∂^J f(a)`, keyed by layout index.
    pub fn from_partials(layout: &Arc<SeriesLayout>, basepoint: &[f64], partials: &[f64]) -> Self {
        assert_eq!(partials.len(), layout.len());
        let coeffs =
            partials.iter().zip(layout.monomials()).map(|(d, m)| d / m.factorial()).collect();
        Self { layout: layout.clone(), basepoint: basepoint.into(), coeffs }
    }

    /// Evaluates the truncated polynomial at `basepoint + delta`.
    pub fn eval_offset(&self, delta: &[f64]) -> f64 {
        self.coeffs.iter().zip(self.layout.monomials()).map(|(c, m)| c * m.monomial(delta)).sum()
    }
}

impl<S: Scalar> TruncatedSeries<S> {
    pub fn from_coeffs(layout: &Arc<SeriesLayout>, basepoint: &[f64], coeffs: Vec<S>) -> Self {
        assert_eq!(coeffs.len(), layout.len(), "coefficient count does not match layout");
        Self { layout: layout.clone(), basepoint: basepoint.into(), coeffs }
    }

    pub fn constant_with(layout: &Arc<SeriesLayout>, basepoint: &[f64], c: S) -> Self {
        let zero = c.zero_like();
        let mut coeffs = vec![zero; layout.len()];
        coeffs[0] = c;
        Self { layout: layout.clone(), basepoint: basepoint.into(), coeffs }
    }

    pub fn layout(&self) -> &Arc<SeriesLayout> {
        &self.layout
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn basepoint(&self) -> &[f64] {
        &self.basepoint
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn constant_term(&self) -> &S {
        &self.coeffs[0]
    }

    /// Normalized coefficient `∂^J f / J!`, or `None` beyond the truncation order.
    pub fn coeff(&self, m: &MultiIndex) -> Option<&S> {
        self.layout.index_of(m).map(|i| &self.coeffs[i])
    }

    /// Raw partial derivative `∂^J f(a)`.
    pub fn derivative(&self, m: &MultiIndex) -> Option<S> {
        self.coeff(m).map(|c| c.scale(m.factorial()))
    }

    /// First partials at the basepoint.
    pub fn gradient(&self) -> Vec<S> {
        assert!(self.order() >= 1, "gradient needs order >= 1");
        (0..self.nvars())
            .map(|i| self.coeffs[self.layout.index_of(&MultiIndex::unit(self.nvars(), i)).unwrap()].clone())
            .collect()
    }

    /// Series of `∂_i f`, truncated one order lower.
    pub fn partial(&self, i: usize) -> Result<Self, JetError> {
        if self.order() == 0 {
            return Err(JetError::OrderExhausted);
        }
        let target = SeriesLayout::new(self.nvars(), self.order() - 1);
        Ok(self.derivative_into(&MultiIndex::unit(self.nvars(), i), &target))
    }

    /// Series of `∂^J f` in a layout of the same dimension with order at most
    /// `order - |J|`. Coefficient rule: `c'_M = (J+M)!/M! · c_{J+M}`.
    pub fn derivative_into(&self, j: &MultiIndex, target: &Arc<SeriesLayout>) -> Self {
        assert_eq!(target.nvars, self.nvars());
        assert!(
            target.order + j.order() as usize <= self.order(),
            "derivative_into: target order {} + |J| {} exceeds series order {}",
            target.order,
            j.order(),
            self.order()
        );
        let coeffs = target
            .monomials()
            .iter()
            .map(|m| {
                let jm = j.add(m);
                let w = jm.factorial() / m.factorial();
                self.coeffs[self.layout.index_of(&jm).unwrap()].scale(w)
            })
            .collect();
        Self { layout: target.clone(), basepoint: self.basepoint.clone(), coeffs }
    }

    /// Drops every coefficient above `target.order()`.
    pub fn truncate_into(&self, target: &Arc<SeriesLayout>) -> Self {
        self.derivative_into(&MultiIndex::zero(self.nvars()), target)
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> TruncatedSeries<T> {
        TruncatedSeries {
            layout: self.layout.clone(),
            basepoint: self.basepoint.clone(),
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Multiplies every coefficient by a ring element.
    pub fn scale_by(&self, c: &S) -> Self {
        Self {
            layout: self.layout.clone(),
            basepoint: self.basepoint.clone(),
            coeffs: self.coeffs.iter().map(|x| x.clone() * c.clone()).collect(),
        }
    }

    fn with_coeffs(&self, coeffs: Vec<S>) -> Self {
        Self { layout: self.layout.clone(), basepoint: self.basepoint.clone(), coeffs }
    }

    fn check_shape(&self, other: &Self) {
        assert!(
            self.layout.same_shape(&other.layout),
            "series layouts differ: ({}, {}) vs ({}, {})",
            self.layout.nvars,
            self.layout.order,
            other.layout.nvars,
            other.layout.order
        );
    }

    /// `f - f(a)`: the part with zero constant term.
    fn nilpotent_part(&self) -> Self {
        let mut c = self.coeffs.clone();
        c[0] = c[0].zero_like();
        self.with_coeffs(c)
    }

    fn one(&self) -> Self {
        let mut c: Vec<S> = self.coeffs.iter().map(|x| x.zero_like()).collect();
        c[0] = c[0].constant_like(1.0);
        self.with_coeffs(c)
    }

    /// `Σ_{m=0}^{K} w_m g^m` for a nilpotent `g`; exact after `K` terms.
    fn nilpotent_power_sum(&self, g: &Self, weights: impl Fn(usize) -> S) -> Self {
        let mut acc = self.one().scale_by(&weights(0));
        let mut power = self.one();
        for m in 1..=self.order() {
            power = power * g.clone();
            acc = acc + power.scale_by(&weights(m));
        }
        acc
    }

    /// Composite `outer(inner_1, …, inner_m)` through the order of `inner`.
    ///
    /// `outer` is a series in `m` variables at basepoint `b`; the constant
    /// terms of `inner` must equal `b`.
    pub fn compose(outer: &TruncatedSeries<f64>, inner: &[Self]) -> Result<Self, JetError> {
        if inner.len() != outer.nvars() {
            return Err(JetError::DimensionMismatch { expected: outer.nvars(), found: inner.len() });
        }
        let first = inner.first().ok_or(JetError::DimensionMismatch { expected: 1, found: 0 })?;
        for s in inner {
            first.check_shape(s);
        }
        let k = first.order();
        if outer.order() < k {
            return Err(JetError::OrderMismatch { needed: k, found: outer.order() });
        }
        for (i, s) in inner.iter().enumerate() {
            let c = s.constant_term().value();
            let b = outer.basepoint()[i];
            if (c - b).abs() > 1e-12 * (1.0 + b.abs()) {
                return Err(JetError::BasepointMismatch { index: i, expected: b, found: c });
            }
        }
        let g: Vec<Self> = inner.iter().map(Self::nilpotent_part).collect();
        let outer_layout = outer.layout();
        let limit = outer_layout.degree_range(k).end;
        // products[idx] = Π g_j^{M_j} for the outer monomial M at idx
        let mut products: Vec<Self> = Vec::with_capacity(limit);
        let mut acc = first.one().scale_by(&first.constant_term().constant_like(outer.coeffs[0]));
        products.push(first.one());
        for idx in 1..limit {
            let m = outer_layout.monomial(idx);
            let j = m.last_nonzero().unwrap();
            let prev = outer_layout.index_of(&m.minus(j).unwrap()).unwrap();
            let p = products[prev].clone() * g[j].clone();
            let c = outer.coeffs[idx];
            if c != 0.0 {
                acc = acc + p.scale_by(&p.coeffs[0].constant_like(c));
            }
            products.push(p);
        }
        Ok(acc)
    }
}

impl<S: Scalar> Add for TruncatedSeries<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.check_shape(&rhs);
        let coeffs = self.coeffs.into_iter().zip(rhs.coeffs).map(|(a, b)| a + b).collect();
        Self { layout: self.layout, basepoint: self.basepoint, coeffs }
    }
}

impl<S: Scalar> Sub for TruncatedSeries<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.check_shape(&rhs);
        let coeffs = self.coeffs.into_iter().zip(rhs.coeffs).map(|(a, b)| a - b).collect();
        Self { layout: self.layout, basepoint: self.basepoint, coeffs }
    }
}

impl<S: Scalar> Neg for TruncatedSeries<S> {
    type Output = Self;
    fn neg(self) -> Self {
        let coeffs = self.coeffs.into_iter().map(|a| -a).collect();
        Self { layout: self.layout, basepoint: self.basepoint, coeffs }
    }
}

impl<S: Scalar> Mul for TruncatedSeries<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.check_shape(&rhs);
        let zero = self.coeffs[0].zero_like();
        let mut out: Vec<Option<S>> = vec![None; self.coeffs.len()];
        for &(a, b, c) in &self.layout.mul_pairs {
            let term = self.coeffs[a as usize].clone() * rhs.coeffs[b as usize].clone();
            let slot = &mut out[c as usize];
            *slot = Some(match slot.take() {
                Some(acc) => acc + term,
                None => term,
            });
        }
        let coeffs = out.into_iter().map(|x| x.unwrap_or_else(|| zero.clone())).collect();
        Self { layout: self.layout, basepoint: self.basepoint, coeffs }
    }
}

impl<S: Scalar> Div for TruncatedSeries<S> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<S: Scalar> Scalar for TruncatedSeries<S> {
    fn constant_like(&self, c: f64) -> Self {
        let mut coeffs: Vec<S> = self.coeffs.iter().map(|x| x.zero_like()).collect();
        coeffs[0] = coeffs[0].constant_like(c);
        self.with_coeffs(coeffs)
    }

    fn value(&self) -> f64 {
        self.coeffs[0].value()
    }

    fn exp(&self) -> Self {
        let c0 = self.coeffs[0].exp();
        let g = self.nilpotent_part();
        let proto = self.coeffs[0].clone();
        let mut fact = 1.0;
        let mut weights = vec![proto.constant_like(1.0)];
        for m in 1..=self.order() {
            fact *= m as f64;
            weights.push(proto.constant_like(1.0 / fact));
        }
        self.nilpotent_power_sum(&g, |m| weights[m].clone()).scale_by(&c0)
    }

    fn ln(&self) -> Self {
        let c0 = self.coeffs[0].clone();
        let inv = c0.recip();
        let g = self.nilpotent_part().scale_by(&inv);
        let proto = c0.clone();
        let mut s = self.nilpotent_power_sum(&g, |m| {
            if m == 0 {
                proto.zero_like()
            } else {
                let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
                proto.constant_like(sign / m as f64)
            }
        });
        s.coeffs[0] = c0.ln();
        s
    }

    fn recip(&self) -> Self {
        let inv = self.coeffs[0].recip();
        let g = -self.nilpotent_part().scale_by(&inv);
        let proto = inv.clone();
        self.nilpotent_power_sum(&g, |_| proto.constant_like(1.0)).scale_by(&inv)
    }

    fn scale(&self, c: f64) -> Self {
        self.with_coeffs(self.coeffs.iter().map(|x| x.scale(c)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var1(order: usize, at: f64) -> TruncatedSeries {
        TruncatedSeries::variables(1, order, &[at]).remove(0)
    }

    #[test]
    fn layout_is_graded_lex() {
        let l = SeriesLayout::new(2, 2);
        let m: Vec<Vec<u32>> = l.monomials().iter().map(|m| m.entries().to_vec()).collect();
        assert_eq!(m, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(l.degree_range(2), 3..6);
    }

    #[test]
    fn layout_size_is_binomial() {
        for n in 1..=4 {
            for k in 0..=6 {
                let l = SeriesLayout::new(n, k);
                let expected = super::super::multi_index::binomial_u128((n + k) as u64, k as u64);
                assert_eq!(l.len() as u128, expected);
            }
        }
    }

    #[test]
    fn square_of_variable() {
        let x = var1(3, 2.0);
        let sq = x.clone() * x;
        assert_eq!(sq.coeffs(), &[4.0, 4.0, 1.0, 0.0]);
    }

    #[test]
    fn exp_ln_recip_at_scalar_points() {
        let x = var1(4, 0.0);
        let e = x.exp();
        let expect = [1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0];
        for (a, b) in e.coeffs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let y = var1(5, 0.7);
        let back = y.exp().ln();
        for (a, b) in back.coeffs().iter().zip(y.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
        let r = y.recip() * y.clone();
        assert!((r.coeffs()[0] - 1.0).abs() < 1e-15);
        assert!(r.coeffs()[1..].iter().all(|c| c.abs() < 1e-14));
    }

    #[test]
    fn partial_of_product() {
        let v = TruncatedSeries::variables(2, 2, &[0.0, 0.0]);
        let prod = v[0].clone() * v[1].clone();
        let d = prod.partial(0).unwrap();
        assert_eq!(d.order(), 1);
        assert_eq!(d.coeffs(), &[0.0, 0.0, 1.0]);
        let c = TruncatedSeries::constant(&SeriesLayout::new(1, 0), &[0.0], 1.0);
        assert!(matches!(c.partial(0), Err(JetError::OrderExhausted)));
    }

    #[test]
    fn compose_square_with_shift() {
        let l = SeriesLayout::new(1, 2);
        let outer = var1(2, 1.0);
        let outer = outer.clone() * outer;
        let inner = TruncatedSeries::variable(&l, &[0.0], 0) + TruncatedSeries::constant(&l, &[0.0], 1.0);
        let c = TruncatedSeries::compose(&outer, &[inner]).unwrap();
        assert_eq!(c.coeffs(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn compose_rejects_basepoint_mismatch() {
        let outer = var1(2, 1.0);
        let inner = var1(2, 0.0);
        assert!(matches!(
            TruncatedSeries::compose(&outer, &[inner]),
            Err(JetError::BasepointMismatch { .. })
        ));
    }

    #[test]
    fn nested_series_exp() {
        // coefficients that are themselves order-1 series in a parameter t:
        // exp(t δ) with t at 0.5 -> coefficient of δ^2 is t^2/2, d/dt = t.
        let t = var1(1, 0.5);
        let l = SeriesLayout::new(1, 3);
        let zero = t.zero_like();
        let f = TruncatedSeries::from_coeffs(&l, &[0.0], vec![zero.clone(), t.clone(), zero.clone(), zero]);
        let e = f.exp();
        let c2 = &e.coeffs()[2];
        assert!((c2.coeffs()[0] - 0.125).abs() < 1e-15);
        assert!((c2.coeffs()[1] - 0.5).abs() < 1e-15);
    }
}

//! Symmetric covariant tensors stored by multi-index.
//!
//! A symmetric `k`-tensor on an `n`-dimensional space is determined by its
//! components on sorted index tuples, i.e. by multi-indices of order `k`.
//! `m_k` and `σ_k` live here, written in the `dλ` basis.

use std::fmt;
use std::sync::Arc;

use crate::jets::{binomial, MultiIndex, SeriesLayout};
use crate::scalar::Scalar;

#[derive(Clone)]
pub struct SymTensor<S = f64> {
    dim: usize,
    degree: usize,
    layout: Arc<SeriesLayout>,
    coeffs: Vec<S>,
}

impl<S: fmt::Debug> fmt::Debug for SymTensor<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        let range = self.layout.degree_range(self.degree);
        for (c, idx) in self.coeffs.iter().zip(range) {
            m.entry(&self.layout.monomial(idx).to_indices(), c);
        }
        m.finish()
    }
}

impl<S: Scalar> SymTensor<S> {
    pub fn from_fn(dim: usize, degree: usize, f: impl FnMut(&MultiIndex) -> S) -> Self {
        let layout = SeriesLayout::new(dim, degree);
        let coeffs = layout.monomials()[layout.degree_range(degree)].iter().map(f).collect();
        Self { dim, degree, layout, coeffs }
    }

    pub fn zeros(proto: &S, dim: usize, degree: usize) -> Self {
        Self::from_fn(dim, degree, |_| proto.zero_like())
    }

    /// Degree-0 tensor holding a scalar.
    pub fn scalar(dim: usize, value: S) -> Self {
        let mut v = Some(value);
        Self::from_fn(dim, 0, |_| v.take().unwrap())
    }

    /// Degree-1 tensor with the given components.
    pub fn vector(components: &[S]) -> Self {
        Self::from_fn(components.len(), 1, |m| components[m.first_nonzero().unwrap()].clone())
    }

    /// Degree-2 tensor from a matrix; only the upper triangle is read.
    pub fn from_matrix(m: &[Vec<S>]) -> Self {
        Self::from_fn(m.len(), 2, |j| {
            let idx = j.to_indices();
            m[idx[0]][idx[1]].clone()
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn slot(&self, j: &MultiIndex) -> usize {
        assert_eq!(j.order() as usize, self.degree, "multi-index order does not match tensor degree");
        self.layout.index_of(j).expect("multi-index dimension") - self.layout.degree_range(self.degree).start
    }

    pub fn get(&self, j: &MultiIndex) -> &S {
        &self.coeffs[self.slot(j)]
    }

    pub fn set(&mut self, j: &MultiIndex, value: S) {
        let s = self.slot(j);
        self.coeffs[s] = value;
    }

    /// Component on an arbitrary (unsorted) index tuple.
    pub fn component(&self, indices: &[usize]) -> &S {
        self.get(&MultiIndex::from_indices(self.dim, indices))
    }

    /// `(multi-index, component)` pairs in graded lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        let range = self.layout.degree_range(self.degree);
        self.layout.monomials()[range].iter().zip(&self.coeffs)
    }

    pub fn as_matrix(&self) -> Vec<Vec<S>> {
        assert_eq!(self.degree, 2);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.component(&[i, j]).clone()).collect())
            .collect()
    }

    /// `σ(w_1, …, w_k)` on `k` vectors.
    pub fn evaluate(&self, vectors: &[&[S]]) -> S {
        assert_eq!(vectors.len(), self.degree, "evaluate: need one vector per slot");
        let proto = self.coeffs[0].clone();
        if self.degree == 0 {
            return proto;
        }
        let mut acc = proto.zero_like();
        let mut tuple = vec![0usize; self.degree];
        loop {
            let mut term = self.component(&tuple).clone();
            for (slot, &i) in tuple.iter().enumerate() {
                term = term * vectors[slot][i].clone();
            }
            acc = acc + term;
            // odometer
            let mut pos = self.degree;
            loop {
                if pos == 0 {
                    return acc;
                }
                pos -= 1;
                tuple[pos] += 1;
                if tuple[pos] < self.dim {
                    break;
                }
                tuple[pos] = 0;
            }
        }
    }

    /// Interior product `i_v σ`, a tensor of degree `k - 1`.
    pub fn contract(&self, v: &[S]) -> Self {
        assert!(self.degree >= 1);
        SymTensor::from_fn(self.dim, self.degree - 1, |j| {
            let terms = (0..self.dim).map(|i| self.get(&j.plus(i)).clone() * v[i].clone());
            crate::scalar::sum(&self.coeffs[0], terms)
        })
    }

    /// Normalized symmetric product: `(a ⊙ b)_J = Σ_{|K|=deg a} C(J,K) a_K b_{J-K} / C(k, deg a)`.
    ///
    /// This is the average over all ways of distributing the slots, so
    /// `a ⊙ b = a ⊗ b` whenever `a ⊗ b` is already symmetric.
    pub fn sym_product(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let k = self.degree + other.degree;
        let norm = binomial(k as u32, self.degree as u32);
        SymTensor::from_fn(self.dim, k, |j| {
            let terms = j
                .sub_indices()
                .into_iter()
                .filter(|kk| kk.order() as usize == self.degree)
                .map(|kk| {
                    let rest = j.checked_sub(&kk).unwrap();
                    (self.get(&kk).clone() * other.get(&rest).clone()).scale(j.binomial(&kk))
                });
            crate::scalar::sum(&self.coeffs[0], terms).scale(1.0 / norm)
        })
    }

    /// Pushforward by a linear map: `(A·σ)(ξ_1, …) = σ(Aᵀξ_1, …)`, i.e.
    /// component `(i_1…i_k)` is `σ(A_{i_1,·}, …, A_{i_k,·})`.
    pub fn push_forward(&self, a: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<S>> =
            a.iter().map(|r| r.iter().map(|x| self.coeffs[0].constant_like(*x)).collect()).collect();
        SymTensor::from_fn(self.dim, self.degree, |j| {
            let idx = j.to_indices();
            let vecs: Vec<&[S]> = idx.iter().map(|&i| rows[i].as_slice()).collect();
            self.evaluate(&vecs)
        })
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> SymTensor<T> {
        SymTensor { dim: self.dim, degree: self.degree, layout: self.layout.clone(), coeffs: self.coeffs.iter().map(f).collect() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|x| x.scale(c))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.dim, self.degree), (other.dim, other.degree));
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.clone() + b.clone()).collect();
        Self { dim: self.dim, degree: self.degree, layout: self.layout.clone(), coeffs }
    }

    pub fn values(&self) -> SymTensor<f64> {
        self.map(|x| x.value())
    }

    /// Largest absolute componentwise difference of the constant parts.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a.value() - b.value()).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|a| a.value().abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_matches_quadratic_form() {
        let m = vec![vec![2.0, 0.5], vec![0.5, 3.0]];
        let t = SymTensor::from_matrix(&m);
        let v = [1.0, -2.0];
        let w = [0.3, 0.7];
        let expect = 2.0 * 1.0 * 0.3 + 0.5 * (1.0 * 0.7 + -2.0 * 0.3) + 3.0 * -2.0 * 0.7;
        assert!((t.evaluate(&[&v, &w]) - expect).abs() < 1e-15);
    }

    #[test]
    fn contraction_lowers_degree() {
        let t = SymTensor::from_fn(2, 3, |j| j.get(0) as f64 + 10.0 * j.get(1) as f64);
        let v = [0.4, -1.1];
        let w = [2.0, 0.5];
        let c = t.contract(&v);
        assert!((c.evaluate(&[&w, &w]) - t.evaluate(&[&v, &w, &w])).abs() < 1e-12);
    }

    #[test]
    fn sym_product_of_vectors_is_symmetrized_outer() {
        let a = SymTensor::vector(&[1.0, 2.0]);
        let b = SymTensor::vector(&[3.0, -1.0]);
        let p = a.sym_product(&b);
        // (a_0 b_1 + a_1 b_0)/2
        assert!((p.component(&[0, 1]) - (1.0 * -1.0 + 2.0 * 3.0) / 2.0).abs() < 1e-15);
        assert!((p.component(&[0, 0]) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn push_forward_pullback_identity() {
        let t = SymTensor::from_fn(2, 3, |j| 1.0 + j.get(0) as f64 * 0.5 - j.get(1) as f64);
        let a = vec![vec![1.2, 0.3], vec![-0.4, 0.9]];
        let pushed = t.push_forward(&a);
        // (Aσ)(ξ,ξ,ξ) = σ(Aᵀξ,…)
        let xi = [0.7, -0.2];
        let at_xi = [a[0][0] * xi[0] + a[1][0] * xi[1], a[0][1] * xi[0] + a[1][1] * xi[1]];
        assert!((pushed.evaluate(&[&xi, &xi, &xi]) - t.evaluate(&[&at_xi, &at_xi, &at_xi])).abs() < 1e-12);
    }
}

//! Central-moment tensors of a chart, the invariant frame and the scalar
//! invariants `σ_k(v_{i₁}, …, v_{i_k})`.

use std::collections::BTreeMap;

use super::{ChartJet, FrameError};
use crate::expfam::central_moment;
use crate::jets::{binomial_u128, SeriesLayout, TruncatedSeries};
use crate::linalg;
use crate::scalar::Scalar;
use crate::tensor::SymTensor;

/// Below this Hadamard ratio the frame counts as degenerate.
pub const FRAME_REGULARITY_TOL: f64 = 1e-10;

/// `σ₂, …, σ_{kmax}` of a chart.
///
/// The chart only fixes `ln Z` up to a constant, so the `Z`-jet is taken as
/// `exp` of the cumulant jet with zero constant term. Moments
/// `m_J = Z_{λ_J}/Z` then feed the binomial formula.
pub fn sigma_tensors<S: Scalar>(c: &ChartJet<S>, kmax: usize) -> Result<Vec<SymTensor<S>>, FrameError> {
    if kmax < 2 {
        return Ok(Vec::new());
    }
    if c.order() + 1 < kmax {
        return Err(FrameError::InsufficientOrder { needed: kmax - 1, found: c.order() });
    }
    let n = c.dim();
    let proto = c.lambda()[0].zero_like();
    let basepoint = c.x_series()[0].basepoint().to_vec();
    let layout = SeriesLayout::new(n, kmax);
    let coeffs = layout
        .monomials()
        .iter()
        .map(|m| {
            if m.order() == 0 {
                return proto.clone();
            }
            let i = m.first_nonzero().unwrap();
            let rest = m.minus(i).unwrap();
            let a = c.x_series()[i].coeff(&rest).expect("order checked above").clone();
            a.scale(1.0 / f64::from(m.get(i)))
        })
        .collect();
    let cumulants = TruncatedSeries::from_coeffs(&layout, &basepoint, coeffs);
    let z = cumulants.exp();
    let moments: Vec<SymTensor<S>> = (1..=kmax)
        .map(|d| SymTensor::from_fn(n, d, |j| z.coeff(j).unwrap().scale(j.factorial())))
        .collect();
    (2..=kmax)
        .map(|k| central_moment(&moments[..k]).map_err(|e| FrameError::Internal(e.to_string())))
        .collect()
}

/// `α₁ = x^i_{λ_j} λ_i dλ_j`.
pub fn alpha1<S: Scalar>(c: &ChartJet<S>) -> Vec<S> {
    let n = c.dim();
    let m = c.first_partials();
    (0..n)
        .map(|j| crate::scalar::sum(&c.lambda()[0], (0..n).map(|i| m[i][j].clone() * c.lambda()[i].clone())))
        .collect()
}

/// `v₁ = σ₂⁻¹ α₁`, `A = σ₂⁻¹ ∘ i_{v₁}σ₃`, `v_{i+1} = A v_i`.
#[derive(Clone, Debug)]
pub struct Frame<S = f64> {
    v: Vec<Vec<S>>,
    a: Vec<Vec<S>>,
    regularity: f64,
}

impl<S: Scalar> Frame<S> {
    /// `v_1, …, v_n` in the `∂_{λ_i}` basis (0-based here).
    pub fn vectors(&self) -> &[Vec<S>] {
        &self.v
    }

    pub fn operator(&self) -> &[Vec<S>] {
        &self.a
    }

    /// Hadamard ratio `|det[v₁ … v_n]| / Π‖v_i‖` of the constant parts.
    pub fn regularity(&self) -> f64 {
        self.regularity
    }

    pub fn values(&self) -> Vec<Vec<f64>> {
        self.v.iter().map(|v| v.iter().map(|x| x.value()).collect()).collect()
    }
}

fn max_abs<S: Scalar>(t: &SymTensor<S>) -> f64 {
    t.max_abs()
}

pub fn build_frame<S: Scalar>(sigma2: &SymTensor<S>, sigma3: &SymTensor<S>, alpha1: &[S]) -> Result<Frame<S>, FrameError> {
    let n = sigma2.dim();
    if sigma2.degree() != 2 || sigma3.degree() != 3 || alpha1.len() != n || sigma3.dim() != n {
        return Err(FrameError::DimensionMismatch { expected: n, found: alpha1.len() });
    }
    let s2 = sigma2.as_matrix();
    let s2v: Vec<Vec<f64>> = s2.iter().map(|r| r.iter().map(|x| x.value()).collect()).collect();
    if !linalg::is_positive_definite(&s2v) {
        return Err(FrameError::DegenerateSigma2);
    }
    if alpha1.iter().all(|a| a.value() == 0.0) {
        return Err(FrameError::DegenerateFrame("α₁ vanishes".into()));
    }
    if n >= 2 && max_abs(sigma3) <= 1e-12 * max_abs(sigma2).powf(1.5) {
        return Err(FrameError::DegenerateFrame("σ₃ vanishes, so A = 0".into()));
    }
    let v1 = linalg::solve(&s2, alpha1).ok_or(FrameError::DegenerateSigma2)?;
    let m = sigma3.contract(&v1).as_matrix();
    let cols: Vec<Vec<S>> = (0..n).map(|j| (0..n).map(|i| m[i][j].clone()).collect()).collect();
    let a_cols = linalg::solve_many(&s2, &cols).ok_or(FrameError::DegenerateSigma2)?;
    let a: Vec<Vec<S>> = (0..n).map(|i| (0..n).map(|j| a_cols[j][i].clone()).collect()).collect();
    let mut v = vec![v1];
    for i in 1..n {
        let next = linalg::mat_vec(&a, &v[i - 1]);
        v.push(next);
    }
    let vals: Vec<Vec<f64>> = v.iter().map(|w| w.iter().map(|x| x.value()).collect()).collect();
    let regularity = linalg::hadamard_ratio(&vals);
    if !(regularity >= FRAME_REGULARITY_TOL) {
        return Err(FrameError::DegenerateFrame(format!(
            "v₁, …, v_n are dependent (Hadamard ratio {regularity:e})"
        )));
    }
    Ok(Frame { v, a, regularity })
}

/// The frame of a chart of order at least 2.
pub fn frame_at<S: Scalar>(c: &ChartJet<S>) -> Result<Frame<S>, FrameError> {
    let s = sigma_tensors(c, 3)?;
    build_frame(&s[0], &s[1], &alpha1(c))
}

/// `σ₂⁻¹(α₁, α₁) = x^i_{λ_j} λ_i λ_j`.
pub fn second_order_invariant<S: Scalar>(c: &ChartJet<S>) -> Result<S, FrameError> {
    if !c.first_partials_values_pd() {
        return Err(FrameError::DegenerateSigma2);
    }
    let a = alpha1(c);
    Ok(crate::scalar::dot(&a, c.lambda()))
}

impl<S: Scalar> ChartJet<S> {
    fn first_partials_values_pd(&self) -> bool {
        let m = self.first_partials();
        let n = m.len();
        let sym: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| 0.5 * (m[i][j].value() + m[j][i].value())).collect()).collect();
        linalg::is_positive_definite(&sym)
    }
}

/// Non-decreasing index tuples of length `k` over `0..n`.
pub fn sorted_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i, cur, out);
            cur.pop();
        }
    }
    rec(n, k, 0, &mut cur, &mut out);
    out
}

/// All scalar invariants of a chart up to degree `kmax`.
///
/// Keys: `second_order`; `sigma{k}(i1,…,ik)` with 1-based frame indices; and
/// for `n = 2` the names `I21 … I34`, `J1 … J4`.
#[derive(Clone, Debug)]
pub struct InvariantTable<S = f64> {
    n: usize,
    kmax: usize,
    values: BTreeMap<String, S>,
}

pub fn sigma_name(indices: &[usize]) -> String {
    let parts: Vec<String> = indices.iter().map(|i| (i + 1).to_string()).collect();
    format!("sigma{}({})", indices.len(), parts.join(","))
}

impl<S: Scalar> InvariantTable<S> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn get(&self, name: &str) -> Option<&S> {
        self.values.get(name)
    }

    /// `σ_k(v_{i₁}, …)` for 0-based indices in any order.
    pub fn sigma(&self, indices: &[usize]) -> Option<&S> {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        self.values.get(&sigma_name(&idx))
    }

    pub fn second_order(&self) -> &S {
        &self.values["second_order"]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &S)> {
        self.values.iter()
    }

    pub fn values(&self) -> InvariantTable<f64> {
        InvariantTable {
            n: self.n,
            kmax: self.kmax,
            values: self.values.iter().map(|(k, v)| (k.clone(), v.value())).collect(),
        }
    }
}

pub fn scalar_invariants<S: Scalar>(c: &ChartJet<S>, kmax: usize) -> Result<InvariantTable<S>, FrameError> {
    let kmax = kmax.max(3);
    let sigmas = sigma_tensors(c, kmax)?;
    let frame = build_frame(&sigmas[0], &sigmas[1], &alpha1(c))?;
    Ok(table_from(c, &sigmas, &frame))
}

pub(crate) fn table_from<S: Scalar>(c: &ChartJet<S>, sigmas: &[SymTensor<S>], frame: &Frame<S>) -> InvariantTable<S> {
    let n = c.dim();
    let kmax = sigmas.len() + 1;
    let mut values = BTreeMap::new();
    values.insert("second_order".to_string(), crate::scalar::dot(&alpha1(c), c.lambda()));
    for (s, k) in sigmas.iter().zip(2..) {
        for t in sorted_tuples(n, k) {
            let vecs: Vec<&[S]> = t.iter().map(|&i| frame.v[i].as_slice()).collect();
            values.insert(sigma_name(&t), s.evaluate(&vecs));
        }
    }
    if n == 2 {
        let g = |t: &[usize]| values[&sigma_name(t)].clone();
        let named = [
            ("I21", g(&[0, 0])),
            ("I22", g(&[0, 1])),
            ("I23", g(&[1, 1])),
            ("I31", g(&[0, 0, 0])),
            ("I32", g(&[0, 0, 1])),
            ("I33", g(&[0, 1, 1])),
            ("I34", g(&[1, 1, 1])),
        ];
        for (k, v) in named {
            values.insert(k.to_string(), v);
        }
        let i = |k: &str| values[k].clone();
        let den = i("I21") * i("I23") - i("I22") * i("I22");
        let js = [
            ("J1", i("I21") * i("I33") - i("I22") * i("I32")),
            ("J2", i("I22") * i("I33") - i("I23") * i("I32")),
            ("J3", i("I21") * i("I34") - i("I22") * i("I33")),
            ("J4", i("I22") * i("I34") - i("I23") * i("I33")),
        ];
        for (k, num) in js {
            values.insert(k.to_string(), num / den.clone());
        }
    }
    InvariantTable { n, kmax, values }
}

/// `|a − b| / max(1, |a|, |b|)`.
pub fn rel_residual(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// One identity `σ₃(v₁, v_i, v_j) = σ₃(v₁, v_k, v_l)` with `i + j = k + l`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sigma3Relation {
    pub lhs: [usize; 2],
    pub rhs: [usize; 2],
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationReport {
    /// `(i, residual of i_{v_i}σ₂ − i_{v_{i−1}} i_{v₁}σ₃)` for `i = 2…n`.
    pub frame: Vec<(usize, f64)>,
    pub sigma3: Vec<Sigma3Relation>,
    /// `C(n − 1, 2)`, the expected number of `σ₃` relations.
    pub expected_count: usize,
}

impl RelationReport {
    pub fn max_residual(&self) -> f64 {
        self.frame.iter().map(|r| r.1).chain(self.sigma3.iter().map(|r| r.residual)).fold(0.0, f64::max)
    }
}

/// Residuals of the algebraic relations forced by the frame construction.
/// Each is relative, see [`rel_residual`]; 1-based indices in the report.
pub fn relation_residuals(c: &ChartJet) -> Result<RelationReport, FrameError> {
    let n = c.dim();
    let sigmas = sigma_tensors(c, 3)?;
    let frame = build_frame(&sigmas[0], &sigmas[1], &alpha1(c))?;
    let (s2, s3) = (&sigmas[0], &sigmas[1]);
    let v = &frame.v;
    let mut frame_res = Vec::new();
    for i in 1..n {
        let lhs = s2.contract(&v[i]);
        let rhs = s3.contract(&v[0]).contract(&v[i - 1]);
        let r = lhs
            .entries()
            .zip(rhs.entries())
            .map(|((_, a), (_, b))| rel_residual(*a, *b))
            .fold(0.0, f64::max);
        frame_res.push((i + 1, r));
    }
    let s3v = |i: usize, j: usize| s3.evaluate(&[&v[0], &v[i], &v[j]]);
    let mut rels = Vec::new();
    for sum in 0..=2 * (n - 1) {
        let pairs: Vec<(usize, usize)> = (0..n).filter_map(|i| sum.checked_sub(i).filter(|&j| j >= i && j < n).map(|j| (i, j))).collect();
        if let Some(&(i0, j0)) = pairs.first() {
            for &(i, j) in &pairs[1..] {
                rels.push(Sigma3Relation {
                    lhs: [i0 + 1, j0 + 1],
                    rhs: [i + 1, j + 1],
                    residual: rel_residual(s3v(i0, j0), s3v(i, j)),
                });
            }
        }
    }
    let expected_count = if n >= 3 { binomial_u128((n - 1) as u64, 2) as usize } else { 0 };
    Ok(RelationReport { frame: frame_res, sigma3: rels, expected_count })
}

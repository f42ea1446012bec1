//! Frame derivatives of invariants, the `n = 2` syzygies, the commutator
//! `[v₁, v₂]` and the functional rank of the third-order invariants.
//!
//! Everything here reruns the invariant pipeline over series scalars: a
//! chart lifted to order-1 series in a basepoint shift `ε` yields invariants
//! whose linear coefficients are their `λ`-gradients.

use super::invariants::{alpha1, build_frame, sigma_tensors, sorted_tuples, table_from, Frame, InvariantTable};
use super::{ChartJet, FrameError, LagrangianFamily};
use crate::jets::{MultiIndex, SeriesLayout, TruncatedSeries};
use crate::linalg;
use crate::scalar::Scalar;
use crate::tensor::SymTensor;

/// Invariants of a chart as first-order series in the basepoint shift.
#[derive(Clone, Debug)]
pub struct InvariantJet {
    n: usize,
    table: InvariantTable<TruncatedSeries>,
    frame: Frame<TruncatedSeries>,
    sigmas: Vec<SymTensor<TruncatedSeries>>,
}

fn linear_part(s: &TruncatedSeries, j: usize) -> f64 {
    s.coeff(&MultiIndex::unit(s.nvars(), j)).copied().unwrap_or(0.0)
}

impl InvariantJet {
    /// Needs a chart of order at least `max(kmax, 3)`.
    pub fn at(c: &ChartJet, kmax: usize) -> Result<Self, FrameError> {
        let kmax = kmax.max(3);
        if c.order() < kmax {
            return Err(FrameError::InsufficientOrder { needed: kmax, found: c.order() });
        }
        let lifted = c.lift(1)?;
        let sigmas = sigma_tensors(&lifted, kmax)?;
        let frame = build_frame(&sigmas[0], &sigmas[1], &alpha1(&lifted))?;
        let table = table_from(&lifted, &sigmas, &frame);
        Ok(Self { n: c.dim(), table, frame, sigmas })
    }

    pub fn from_family(fam: &dyn LagrangianFamily, lambda0: &[f64], kmax: usize) -> Result<Self, FrameError> {
        let kmax = kmax.max(3);
        Self::at(&fam.chart_jet(lambda0, kmax)?, kmax)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> InvariantTable<f64> {
        self.table.values()
    }

    pub fn frame(&self) -> Vec<Vec<f64>> {
        self.frame.values()
    }

    fn series(&self, name: &str) -> Result<&TruncatedSeries, FrameError> {
        self.table.get(name).ok_or_else(|| FrameError::UnknownInvariant(name.to_string()))
    }

    pub fn value(&self, name: &str) -> Result<f64, FrameError> {
        Ok(self.series(name)?.value())
    }

    /// `v_i(f)` for a function given as a series in the basepoint shift.
    pub fn directional(&self, f: &TruncatedSeries, i: usize) -> f64 {
        let v = &self.frame.vectors()[i];
        (0..self.n).map(|j| v[j].value() * linear_part(f, j)).sum()
    }

    /// `v_i(I)` for a named invariant; `i` is 0-based.
    pub fn derivative(&self, name: &str, i: usize) -> Result<f64, FrameError> {
        if i >= self.n {
            return Err(FrameError::DimensionMismatch { expected: self.n, found: i + 1 });
        }
        Ok(self.directional(self.series(name)?, i))
    }

    /// `[v_a, v_b]` in the `∂_{λ_k}` basis.
    pub fn bracket(&self, a: usize, b: usize) -> Vec<f64> {
        let v = self.frame.vectors();
        (0..self.n)
            .map(|k| self.directional(&v[b][k], a) - self.directional(&v[a][k], b))
            .collect()
    }

    /// Coefficients `c` with `[v_a, v_b] = Σ c_i v_i`.
    pub fn bracket_in_frame(&self, a: usize, b: usize) -> Result<Vec<f64>, FrameError> {
        let v = self.frame();
        let m: Vec<Vec<f64>> = (0..self.n).map(|k| (0..self.n).map(|i| v[i][k]).collect()).collect();
        linalg::solve(&m, &self.bracket(a, b))
            .ok_or_else(|| FrameError::DegenerateFrame("frame matrix is singular".into()))
    }
}

/// `v_i(I)` at `λ₀` for a chart family; `i` is 0-based.
pub fn invariant_derivative(
    fam: &dyn LagrangianFamily,
    name: &str,
    i: usize,
    lambda0: &[f64],
) -> Result<f64, FrameError> {
    let kmax = name_degree(name).max(3);
    InvariantJet::from_family(fam, lambda0, kmax)?.derivative(name, i)
}

fn name_degree(name: &str) -> usize {
    if let Some(rest) = name.strip_prefix("sigma") {
        return rest.split('(').next().and_then(|d| d.parse().ok()).unwrap_or(3);
    }
    3
}

/// Residuals of the three `n = 2` syzygies and the two `v_i(I₂₁)` identities.
#[derive(Clone, Debug, PartialEq)]
pub struct SyzygyReport {
    pub syzygies: [f64; 3],
    pub i21: [f64; 2],
}

impl SyzygyReport {
    pub fn max_residual(&self) -> f64 {
        self.syzygies.iter().chain(&self.i21).fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Sum of terms, scaled by the largest term when that exceeds one.
fn scaled_sum(terms: &[f64]) -> f64 {
    let scale = terms.iter().fold(1f64, |m, t| m.max(t.abs()));
    terms.iter().sum::<f64>() / scale
}

pub fn syzygy_residuals_2d(fam: &dyn LagrangianFamily, lambda0: &[f64]) -> Result<SyzygyReport, FrameError> {
    if fam.dim() != 2 {
        return Err(FrameError::NotTwoDimensional);
    }
    let jet = InvariantJet::from_family(fam, lambda0, 4)?;
    syzygies_of(&jet)
}

pub(crate) fn syzygies_of(jet: &InvariantJet) -> Result<SyzygyReport, FrameError> {
    if jet.dim() != 2 {
        return Err(FrameError::NotTwoDimensional);
    }
    let i = |k: &str| jet.value(k).expect("n = 2 table");
    let d = |k: &str, dir: usize| jet.derivative(k, dir).expect("n = 2 table");
    let (i21, i31, i32, i33, i34) = (i("I21"), i("I31"), i("I32"), i("I33"), i("I34"));
    let (j1, j2, j3, j4) = (i("J1"), i("J2"), i("J3"), i("J4"));

    let s1 = scaled_sum(&[2.0 * d("I31", 1), -d("I32", 0), -i33, -2.0 * i32]);
    let s2 = scaled_sum(&[
        d("I32", 1),
        -2.0 * d("I33", 0),
        2.0 * j1 * d("I32", 0),
        -4.0 * j2 * d("I31", 0),
        i34,
        -2.0 * j1 * i33,
        4.0 * j2 * i32,
        (6.0 * j2 - 2.0 * j1 * j1) * i31,
        2.0 * j1 * j2 * i21,
    ]);
    let s3 = scaled_sum(&[
        d("I33", 1),
        -d("I34", 0),
        -j1 * d("I32", 1),
        (2.0 * j2 + 3.0 * j3) * d("I31", 1),
        -3.0 * j4 * d("I31", 0),
        -(2.0 * j1 + 4.0) * i34,
        (i33 - 2.0 * i32) * j2,
    ]);
    let a = scaled_sum(&[d("I21", 0), -2.0 * i21, -i31]);
    let b = scaled_sum(&[d("I21", 1), -2.0 * i31, -i32]);
    Ok(SyzygyReport { syzygies: [s1, s2, s3], i21: [a, b] })
}

/// Candidate meanings of `I₄₁, I₄₂` in the commutator formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommutatorCandidate {
    /// `σ₄(v₁,v₁,v₁,v₁)`, `σ₄(v₁,v₁,v₁,v₂)`.
    CentralMoment,
    /// Same slots of the fourth cumulant `σ₄ − 3 σ₂⊙σ₂`.
    Cumulant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorProbe {
    pub candidate: CommutatorCandidate,
    /// `[v₁, v₂] = c₁ v₁ + c₂ v₂`, computed from the frame.
    pub computed: [f64; 2],
    /// The same coefficients from the closed formula.
    pub predicted: [f64; 2],
    pub residual: f64,
}

pub fn commutator_probe(
    fam: &dyn LagrangianFamily,
    lambda0: &[f64],
    candidate: CommutatorCandidate,
) -> Result<CommutatorProbe, FrameError> {
    if fam.dim() != 2 {
        return Err(FrameError::NotTwoDimensional);
    }
    let jet = InvariantJet::from_family(fam, lambda0, 4)?;
    commutator_of(&jet, candidate)
}

pub(crate) fn commutator_of(jet: &InvariantJet, candidate: CommutatorCandidate) -> Result<CommutatorProbe, FrameError> {
    if jet.dim() != 2 {
        return Err(FrameError::NotTwoDimensional);
    }
    let c = jet.bracket_in_frame(0, 1)?;
    let v = jet.frame();
    let s4 = jet.sigmas[2].values();
    let s4 = match candidate {
        CommutatorCandidate::CentralMoment => s4,
        CommutatorCandidate::Cumulant => {
            let s2 = jet.sigmas[0].values();
            s4.add(&s2.sym_product(&s2).scaled(-3.0))
        }
    };
    let i41 = s4.evaluate(&[&v[0], &v[0], &v[0], &v[0]]);
    let i42 = s4.evaluate(&[&v[0], &v[0], &v[0], &v[1]]);
    let i = |k: &str| jet.value(k).expect("n = 2 table");
    let (i21, i22, i23) = (i("I21"), i("I22"), i("I23"));
    let (i31, i32, i33) = (i("I31"), i("I32"), i("I33"));
    let den = i21 * i23 - i22 * i22;
    let p1 = ((i33 - i42) * i22 - i32 * (i23 - i41)) / den - 3.0 * i21;
    let p2 = ((i42 - i33) * i21 - i31 * (i41 - i23)) / den + 1.0;
    let residual = rel_pair([c[0], c[1]], [p1, p2]);
    Ok(CommutatorProbe { candidate, computed: [c[0], c[1]], predicted: [p1, p2], residual })
}

fn rel_pair(a: [f64; 2], b: [f64; 2]) -> f64 {
    super::rel_residual(a[0], b[0]).max(super::rel_residual(a[1], b[1]))
}

/// Jacobian ranks of the third-order invariants with respect to the jet
/// coordinates `λ, x, x_λ, x_λλ` of a Lagrangian chart.
#[derive(Clone, Debug, PartialEq)]
pub struct RankReport {
    /// Rank of `{σ₃(v_{i₁}, v_{i₂}, v_{i₃})}`.
    pub sigma3: usize,
    /// Rank with the second-order invariant added.
    pub with_second_order: usize,
    /// Number of jet coordinates varied.
    pub coordinates: usize,
}

/// Perturbs every free Taylor coefficient of the potential through order 3
/// and the basepoint, and counts independent invariants at order 3.
pub fn invariant_rank(c: &ChartJet, rel_tol: f64) -> Result<RankReport, FrameError> {
    let n = c.dim();
    if c.order() < 2 {
        return Err(FrameError::InsufficientOrder { needed: 2, found: c.order() });
    }
    let h_layout = SeriesLayout::new(n, 3);
    // potential coefficients of degree 1..=3, recovered from the chart
    let h_monos: Vec<MultiIndex> = h_layout.monomials()[h_layout.degree_range(1).start..].to_vec();
    let h_vals: Vec<f64> = h_monos
        .iter()
        .map(|l| {
            let i = l.first_nonzero().unwrap();
            -c.x_series()[i].coeff(&l.minus(i).unwrap()).copied().unwrap_or(0.0) / f64::from(l.get(i))
        })
        .collect();
    let p = n + h_monos.len();
    let pl = SeriesLayout::new(p, 1);
    let zero = vec![0.0; p];
    let param = |k: usize, base: f64| {
        let mut s = TruncatedSeries::variable(&pl, &zero, k);
        s = s + TruncatedSeries::constant(&pl, &zero, base);
        s
    };
    let lambda: Vec<TruncatedSeries> = (0..n).map(|i| param(i, c.lambda()[i])).collect();
    let h: Vec<TruncatedSeries> = h_vals.iter().enumerate().map(|(k, &v)| param(n + k, v)).collect();
    let x_layout = SeriesLayout::new(n, 2);
    let basepoint = c.x_series()[0].basepoint().to_vec();
    let x = (0..n)
        .map(|i| {
            let coeffs = x_layout
                .monomials()
                .iter()
                .map(|m| {
                    let mi = m.plus(i);
                    let k = h_monos.iter().position(|l| *l == mi).expect("degree ≤ 3");
                    h[k].scale(-f64::from(mi.get(i)))
                })
                .collect();
            TruncatedSeries::from_coeffs(&x_layout, &basepoint, coeffs)
        })
        .collect();
    let chart = ChartJet::from_parts(lambda, x)?;
    let sigmas = sigma_tensors(&chart, 3)?;
    let frame = build_frame(&sigmas[0], &sigmas[1], &alpha1(&chart))?;
    let table = table_from(&chart, &sigmas, &frame);
    let grad = |s: &TruncatedSeries| (0..p).map(|j| linear_part(s, j)).collect::<Vec<f64>>();
    let mut rows: Vec<Vec<f64>> = sorted_tuples(n, 3).iter().map(|t| grad(table.sigma(t).unwrap())).collect();
    let sigma3 = linalg::numerical_rank(&rows, rel_tol);
    rows.push(grad(table.second_order()));
    let with_second_order = linalg::numerical_rank(&rows, rel_tol);
    Ok(RankReport { sigma3, with_second_order, coordinates: p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfam::FiniteEnsemble;
    use crate::frame::{random_admissible_potential, ExplicitChart, PotentialChart};
    use crate::jets::{numbered_vars, Expr};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn bernoulli_product() -> PotentialChart {
        let v = numbered_vars("l", 2);
        let half = |x: Expr| -((Expr::c(1.0) + x.exp()) / Expr::c(2.0)).ln();
        PotentialChart::new(half(Expr::var(&v[0])) + half(Expr::var(&v[1])), 2, BTreeMap::new()).unwrap()
    }

    #[test]
    fn i21_identities_and_syzygies_on_random_charts() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let (fam, l0) = random_admissible_potential(2, &mut rng);
            let r = syzygy_residuals_2d(&fam, &l0).unwrap();
            assert!(r.i21.iter().all(|x| x.abs() < 1e-9), "{r:?}");
            assert!(r.syzygies.iter().all(|x| x.abs() < 1e-8), "{r:?}");
        }
    }

    #[test]
    fn syzygies_on_bernoulli_product() {
        let r = syzygy_residuals_2d(&bernoulli_product(), &[0.7, -1.3]).unwrap();
        assert!(r.max_residual() < 1e-8, "{r:?}");
    }

    #[test]
    fn syzygies_detect_non_lagrangian_chart() {
        let v = numbered_vars("l", 2);
        let (a, b) = (Expr::var(&v[0]), Expr::var(&v[1]));
        // x = −∇H for H = −(a² + b²)/2 − a²b/4 + b³/6 + a⁴/12
        let x = vec![
            a.clone() + Expr::c(0.5) * a.clone() * b.clone() - Expr::c(1.0 / 3.0) * a.clone().powi(3),
            b.clone() + Expr::c(0.25) * a.clone().powi(2) - Expr::c(0.5) * b.clone().powi(2),
        ];
        let bent = vec![x[0].clone() + Expr::c(1e-3) * b.clone().powi(3), x[1].clone()];
        let l0 = [0.6, -0.8];
        let good = syzygy_residuals_2d(&ExplicitChart::new(x, BTreeMap::new()), &l0).unwrap();
        let bad = syzygy_residuals_2d(&ExplicitChart::new(bent, BTreeMap::new()), &l0).unwrap();
        assert!(good.max_residual() < 1e-8);
        assert!(bad.max_residual() > 1e-5, "{bad:?}");
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (fam, l0) = random_admissible_potential(2, &mut rng);
        let jet = InvariantJet::from_family(&fam, &l0, 3).unwrap();
        let lay = SeriesLayout::new(2, 1);
        let c = TruncatedSeries::constant(&lay, &l0, 4.2);
        assert_eq!(jet.directional(&c, 0), 0.0);
        assert_eq!(jet.directional(&c, 1), 0.0);
        assert!(matches!(jet.derivative("nope", 0), Err(FrameError::UnknownInvariant(_))));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (fam, l0) = random_admissible_potential(2, &mut rng);
        let jet = InvariantJet::from_family(&fam, &l0, 3).unwrap();
        let v1 = jet.frame()[0].clone();
        let h = 1e-5;
        let at = |s: f64| {
            let l: Vec<f64> = l0.iter().zip(&v1).map(|(a, b)| a + s * b).collect();
            crate::frame::scalar_invariants(&fam.chart_jet(&l, 3).unwrap(), 3).unwrap().get("I32").copied().unwrap()
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        assert!((fd - jet.derivative("I32", 0).unwrap()).abs() < 1e-6 * fd.abs().max(1.0));
    }

    #[test]
    fn commutator_central_moment_candidate() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let (fam, l0) = random_admissible_potential(2, &mut rng);
            let p = commutator_probe(&fam, &l0, CommutatorCandidate::CentralMoment).unwrap();
            let q = commutator_probe(&fam, &l0, CommutatorCandidate::Cumulant).unwrap();
            assert!(p.residual < 1e-10, "{p:?}");
            assert_eq!(p.computed, q.computed);
            assert!(q.residual > 1e-3);
        }
    }

    #[test]
    fn third_order_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (n, h3) in [(2usize, 4usize), (3, 9)] {
            let (fam, l0) = random_admissible_potential(n, &mut rng);
            let r = invariant_rank(&fam.chart_jet(&l0, 2).unwrap(), 1e-8).unwrap();
            assert_eq!(r.sigma3 as u128, crate::affine::hilbert(n, 3));
            assert_eq!(r.sigma3, h3);
            assert_eq!(r.with_second_order, h3 + 1);
        }
    }

    #[test]
    fn ensemble_frame_derivatives() {
        let e = FiniteEnsemble::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let r = syzygy_residuals_2d(&e, &[0.4, -0.2]).unwrap();
        assert!(r.max_residual() < 1e-8, "{r:?}");
    }
}

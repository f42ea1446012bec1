//! Jets of Lagrangian charts `λ ↦ x(λ)` and the families that produce them.

use std::collections::BTreeMap;

use rand::Rng;

use super::FrameError;
use crate::affine::AffineElement;
use crate::expfam::{potential_and_mean, FiniteEnsemble};
use crate::jets::{eval_series, numbered_vars, Expr, MultiIndex, SeriesLayout, TruncatedSeries};
use crate::linalg;
use crate::scalar::Scalar;

/// The jet of a chart at `λ₀`: the basepoint and, for each `i`, the Taylor
/// series of `x^i` in `λ − λ₀` through order `K`.
///
/// With `S = TruncatedSeries` every entry is itself a function of a nearby
/// basepoint, which is how invariant derivatives are computed.
#[derive(Clone, Debug)]
pub struct ChartJet<S = f64> {
    lambda: Vec<S>,
    x: Vec<TruncatedSeries<S>>,
}

impl<S: Scalar> ChartJet<S> {
    pub fn from_parts(lambda: Vec<S>, x: Vec<TruncatedSeries<S>>) -> Result<Self, FrameError> {
        let n = lambda.len();
        if n == 0 || x.len() != n {
            return Err(FrameError::DimensionMismatch { expected: n, found: x.len() });
        }
        let order = x[0].order();
        if x.iter().any(|s| s.nvars() != n || s.order() != order) {
            return Err(FrameError::DimensionMismatch { expected: n, found: x[0].nvars() });
        }
        Ok(Self { lambda, x })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn order(&self) -> usize {
        self.x[0].order()
    }

    pub fn lambda(&self) -> &[S] {
        &self.lambda
    }

    pub fn x_series(&self) -> &[TruncatedSeries<S>] {
        &self.x
    }

    /// `x(λ₀)`.
    pub fn point(&self) -> Vec<S> {
        self.x.iter().map(|s| s.constant_term().clone()).collect()
    }

    /// Raw partial `x^i_{λ_J}`.
    pub fn partial(&self, i: usize, j: &MultiIndex) -> S {
        self.x[i].derivative(j).expect("multi-index within chart order")
    }

    /// `x^i_{λ_j}` as a matrix, row `i`.
    pub fn first_partials(&self) -> Vec<Vec<S>> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.partial(i, &MultiIndex::unit(n, j))).collect()).collect()
    }

    /// Largest violation of `∂_j x^i = ∂_i x^j` and its prolongations, on
    /// constant parts.
    pub fn lagrangian_defect(&self) -> f64 {
        let n = self.dim();
        let k = self.order();
        if k == 0 {
            return 0.0;
        }
        let lay = SeriesLayout::new(n, k - 1);
        let mut worst: f64 = 0.0;
        for m in lay.monomials() {
            for i in 0..n {
                for j in i + 1..n {
                    let a = self.partial(i, &m.plus(j)).value();
                    let b = self.partial(j, &m.plus(i)).value();
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }
}

impl ChartJet<f64> {
    /// Re-expands the jet so that every coefficient becomes a series of order
    /// `r` in a shift `ε` of the basepoint. The result has order `K − r`.
    pub fn lift(&self, r: usize) -> Result<ChartJet<TruncatedSeries>, FrameError> {
        let n = self.dim();
        let k = self.order();
        if r > k {
            return Err(FrameError::InsufficientOrder { needed: r, found: k });
        }
        let lambda0: Vec<f64> = self.x[0].basepoint().to_vec();
        let eps = SeriesLayout::new(n, r);
        let target = SeriesLayout::new(n, k - r);
        let lambda = (0..n)
            .map(|i| TruncatedSeries::variable(&eps, &lambda0, i))
            .collect();
        let x = self
            .x
            .iter()
            .map(|xi| {
                let coeffs = target
                    .monomials()
                    .iter()
                    .map(|m| {
                        // c_M(λ₀ + ε) = Σ_L C(M+L, L) c_{M+L} ε^L
                        let inner = eps
                            .monomials()
                            .iter()
                            .map(|l| {
                                let ml = m.add(l);
                                ml.binomial(l) * xi.coeff(&ml).copied().unwrap_or(0.0)
                            })
                            .collect();
                        TruncatedSeries::from_coeffs(&eps, &lambda0, inner)
                    })
                    .collect();
                TruncatedSeries::from_coeffs(&target, &lambda0, coeffs)
            })
            .collect();
        ChartJet::from_parts(lambda, x)
    }

    /// The chart transported by `g`: `λ' = A^{-T} λ` and
    /// `x'(λ') = A x(Aᵀ λ') + B`, expanded at `λ'₀` by series composition.
    pub fn transport(&self, g: &AffineElement) -> Result<Self, FrameError> {
        let n = self.dim();
        if g.dim() != n {
            return Err(FrameError::DimensionMismatch { expected: n, found: g.dim() });
        }
        let a = g.matrix();
        let lambda_new = g.apply_covector(&self.lambda);
        let lay = self.x[0].layout().clone();
        let vars = TruncatedSeries::variables(n, lay.order(), &lambda_new);
        // (Aᵀ λ')_i, pinned to the old basepoint to absorb round-off
        let inner: Vec<TruncatedSeries> = (0..n)
            .map(|i| {
                let mut acc = TruncatedSeries::constant(vars[0].layout(), &lambda_new, 0.0);
                for (j, v) in vars.iter().enumerate() {
                    acc = acc + v.scale(a[j][i]);
                }
                let mut c = acc.coeffs().to_vec();
                c[0] = self.lambda[i];
                TruncatedSeries::from_coeffs(vars[0].layout(), &lambda_new, c)
            })
            .collect();
        let composed = self
            .x
            .iter()
            .map(|xi| TruncatedSeries::compose(xi, &inner))
            .collect::<Result<Vec<_>, _>>()?;
        let x = (0..n)
            .map(|i| {
                let mut acc = TruncatedSeries::constant(vars[0].layout(), &lambda_new, g.translation()[i]);
                for (k, c) in composed.iter().enumerate() {
                    acc = acc + c.scale(a[i][k]);
                }
                acc
            })
            .collect();
        ChartJet::from_parts(lambda_new, x)
    }

    /// `σ₂ = x^i_{λ_j}` is symmetric positive definite.
    pub fn is_admissible(&self) -> bool {
        let m = self.first_partials();
        let sym: Vec<Vec<f64>> = (0..m.len()).map(|i| (0..m.len()).map(|j| 0.5 * (m[i][j] + m[j][i])).collect()).collect();
        linalg::is_positive_definite(&sym)
    }
}

/// A family of Lagrangian charts `λ ↦ x(λ)` that can be expanded anywhere.
pub trait LagrangianFamily {
    fn dim(&self) -> usize;

    fn chart_jet(&self, lambda0: &[f64], order: usize) -> Result<ChartJet, FrameError>;
}

/// `x = −∇H` for a potential `H(l1, …, ln)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialChart {
    h: Expr,
    n: usize,
    params: BTreeMap<String, f64>,
}

impl PotentialChart {
    pub fn new(h: Expr, n: usize, params: BTreeMap<String, f64>) -> Result<Self, FrameError> {
        let vars = numbered_vars("l", n);
        if let Some(v) = h.variables().into_iter().find(|v| !vars.contains(v)) {
            return Err(FrameError::Jet(crate::jets::JetError::UnboundName(v)));
        }
        if let Some(p) = h.parameters().into_iter().find(|p| !params.contains_key(p)) {
            return Err(FrameError::Jet(crate::jets::JetError::UnboundName(p)));
        }
        Ok(Self { h, n, params })
    }

    pub fn potential(&self) -> &Expr {
        &self.h
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// Jet of `H` itself at `λ₀`.
    pub fn potential_jet(&self, lambda0: &[f64], order: usize) -> Result<TruncatedSeries, FrameError> {
        if lambda0.len() != self.n {
            return Err(FrameError::DimensionMismatch { expected: self.n, found: lambda0.len() });
        }
        Ok(eval_series(&self.h, &numbered_vars("l", self.n), lambda0, &self.params, order)?)
    }
}

impl LagrangianFamily for PotentialChart {
    fn dim(&self) -> usize {
        self.n
    }

    fn chart_jet(&self, lambda0: &[f64], order: usize) -> Result<ChartJet, FrameError> {
        let h = self.potential_jet(lambda0, order + 1)?;
        let x = (0..self.n).map(|i| -h.partial(i).expect("order + 1 ≥ 1")).collect();
        ChartJet::from_parts(lambda0.to_vec(), x)
    }
}

/// A chart given directly by `x^i(l1, …, ln)`; not necessarily Lagrangian.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitChart {
    x: Vec<Expr>,
    params: BTreeMap<String, f64>,
}

impl ExplicitChart {
    pub fn new(x: Vec<Expr>, params: BTreeMap<String, f64>) -> Self {
        Self { x, params }
    }
}

impl LagrangianFamily for ExplicitChart {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn chart_jet(&self, lambda0: &[f64], order: usize) -> Result<ChartJet, FrameError> {
        let vars = numbered_vars("l", self.x.len());
        let x = self
            .x
            .iter()
            .map(|e| eval_series(e, &vars, lambda0, &self.params, order))
            .collect::<Result<Vec<_>, _>>()?;
        ChartJet::from_parts(lambda0.to_vec(), x)
    }
}

impl LagrangianFamily for FiniteEnsemble {
    fn dim(&self) -> usize {
        FiniteEnsemble::dim(self)
    }

    fn chart_jet(&self, lambda0: &[f64], order: usize) -> Result<ChartJet, FrameError> {
        if lambda0.len() != self.dim() {
            return Err(FrameError::DimensionMismatch { expected: self.dim(), found: lambda0.len() });
        }
        let (h, _) = potential_and_mean(self, lambda0, order + 1);
        let x = (0..self.dim()).map(|i| -h.partial(i).expect("order + 1 ≥ 1")).collect();
        ChartJet::from_parts(lambda0.to_vec(), x)
    }
}

/// Chart jet of `x = −∇H` at `λ₀`, rejecting potentials whose `σ₂` is not
/// positive definite there.
pub fn chart_from_potential(h: &Expr, lambda0: &[f64], order: usize) -> Result<ChartJet, FrameError> {
    chart_from_potential_with(h, lambda0, order, &BTreeMap::new())
}

pub fn chart_from_potential_with(
    h: &Expr,
    lambda0: &[f64],
    order: usize,
    params: &BTreeMap<String, f64>,
) -> Result<ChartJet, FrameError> {
    let fam = PotentialChart::new(h.clone(), lambda0.len(), params.clone())?;
    let c = fam.chart_jet(lambda0, order)?;
    if !c.is_admissible() {
        return Err(FrameError::DegenerateSigma2);
    }
    Ok(c)
}

/// Random admissible test potential: `−½ λᵀQλ` with `Q ≻ 0` plus a random
/// polynomial of degrees 3 to 5 with coefficients in `[−0.2, 0.2]`, and a
/// basepoint with `‖λ₀‖ ∈ [0.5, 1.5]`.
///
/// Draws are rejected until `σ₂` is positive definite and the frame at `λ₀`
/// is well conditioned (Hadamard ratio above `1e−3`).
pub fn random_admissible_potential(n: usize, rng: &mut impl Rng) -> (PotentialChart, Vec<f64>) {
    let vars = numbered_vars("l", n);
    loop {
        let l: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-0.5..0.5)).collect()).collect();
        let mut h = Expr::c(0.0);
        for i in 0..n {
            for j in 0..n {
                let q: f64 = (0..n).map(|k| l[i][k] * l[j][k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 };
                h = h - Expr::c(0.5 * q) * Expr::var(&vars[i]) * Expr::var(&vars[j]);
            }
        }
        let lay = SeriesLayout::new(n, 5);
        for d in 3..=5 {
            for m in &lay.monomials()[lay.degree_range(d)] {
                let mut term = Expr::c(rng.random_range(-0.2..0.2));
                for (i, &p) in m.entries().iter().enumerate() {
                    if p > 0 {
                        term = term * Expr::var(&vars[i]).powi(p as i32);
                    }
                }
                h = h + term;
            }
        }
        let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm < 1e-3 {
            continue;
        }
        let radius = rng.random_range(0.5..1.5);
        let lambda0: Vec<f64> = dir.iter().map(|d| d * radius / norm).collect();
        let fam = PotentialChart::new(h, n, BTreeMap::new()).expect("generated potential is closed");
        let Ok(chart) = fam.chart_jet(&lambda0, 2) else { continue };
        if !chart.is_admissible() {
            continue;
        }
        match super::frame_at(&chart) {
            Ok(f) if f.regularity() > 1e-3 => return (fam, lambda0),
            _ => continue,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quadratic_potential() {
        let h = -(Expr::var("l1").powi(2) + Expr::var("l2").powi(2)) / 2.0;
        let c = chart_from_potential(&h, &[1.0, 1.0], 3).unwrap();
        assert_eq!(c.point(), vec![1.0, 1.0]);
        let m = c.first_partials();
        assert_eq!(m, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(c.partial(0, &MultiIndex::new(vec![2, 0])), 0.0);
    }

    #[test]
    fn bernoulli_potential() {
        let h = -((Expr::c(1.0) + Expr::var("l1").exp()) / 2.0).ln();
        let c = chart_from_potential(&h, &[std::f64::consts::LN_2], 2).unwrap();
        assert!((c.point()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.first_partials()[0][0] - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn ensemble_chart_matches_mean_map_derivatives() {
        let ens = FiniteEnsemble::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.2], vec![-0.3, 1.0], vec![0.5, 0.5]]).unwrap();
        let lam = [0.2, -0.4];
        let c = ens.chart_jet(&lam, 2).unwrap();
        let h = 1e-5;
        for j in 0..2 {
            let mut up = lam;
            let mut dn = lam;
            up[j] += h;
            dn[j] -= h;
            let (_, xu) = potential_and_mean(&ens, &up, 1);
            let (_, xd) = potential_and_mean(&ens, &dn, 1);
            for i in 0..2 {
                let fd = (xu[i] - xd[i]) / (2.0 * h);
                assert!((fd - c.first_partials()[i][j]).abs() < 1e-9);
            }
        }
        assert!(c.lagrangian_defect() < 1e-14);
    }

    #[test]
    fn degenerate_sigma2_rejected() {
        let h = (Expr::var("l1").powi(2) + Expr::var("l2").powi(2)) / 2.0;
        assert!(matches!(chart_from_potential(&h, &[0.3, 0.1], 2), Err(FrameError::DegenerateSigma2)));
    }

    #[test]
    fn lift_reexpands_at_shifted_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (fam, lam) = random_admissible_potential(2, &mut rng);
        let c = fam.chart_jet(&lam, 4).unwrap();
        let lifted = c.lift(1).unwrap();
        let step = [1e-6, -2e-6];
        let shifted_lam: Vec<f64> = lam.iter().zip(&step).map(|(a, b)| a + b).collect();
        let shifted = fam.chart_jet(&shifted_lam, 3).unwrap();
        for i in 0..2 {
            for (coef, want) in lifted.x_series()[i].coeffs().iter().zip(shifted.x_series()[i].coeffs()) {
                assert!((coef.eval_offset(&step) - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn transport_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (fam, lam) = random_admissible_potential(3, &mut rng);
        let c = fam.chart_jet(&lam, 3).unwrap();
        let g = AffineElement::random(3, &mut rng);
        let back = c.transport(&g).unwrap().transport(&g.inverse()).unwrap();
        for (a, b) in c.x_series().iter().zip(back.x_series()) {
            for (p, q) in a.coeffs().iter().zip(b.coeffs()) {
                assert!((p - q).abs() < 1e-10 * (1.0 + p.abs()));
            }
        }
    }
}

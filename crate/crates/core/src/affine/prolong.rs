//! Polynomial vector fields on `V` and their prolongations to `J^k(V)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use super::AffineError;
use crate::jets::{eval_series, numbered_vars, Expr, MultiIndex, SeriesLayout, TruncatedSeries};
use crate::tensor::SymTensor;

/// `X = a^i(x) ∂_{x^i}` with polynomial components in `x1, …, xn`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyVectorField {
    components: Vec<Expr>,
    vars: Vec<String>,
}

fn check_polynomial(e: &Expr) -> Result<(), String> {
    match e {
        Expr::Const(_) | Expr::Var(_) => Ok(()),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
            check_polynomial(a)?;
            check_polynomial(b)
        }
        Expr::Neg(a) => check_polynomial(a),
        Expr::Pow(a, k) => match **k {
            Expr::Const(c) if c >= 0.0 && c.fract() == 0.0 => check_polynomial(a),
            _ => Err(format!("exponent must be a non-negative integer in {e}")),
        },
        Expr::Param(p) => Err(format!("unbound parameter `{p}`")),
        _ => Err(format!("non-polynomial operation in {e}")),
    }
}

impl PolyVectorField {
    pub fn new(components: Vec<Expr>) -> Result<Self, AffineError> {
        let vars = numbered_vars("x", components.len());
        for c in &components {
            check_polynomial(c).map_err(AffineError::NotPolynomial)?;
            if let Some(v) = c.variables().into_iter().find(|v| !vars.contains(v)) {
                return Err(AffineError::NotPolynomial(format!("unknown variable `{v}`")));
            }
        }
        Ok(Self { components, vars })
    }

    /// `(A x + B)^i ∂_{x^i}`.
    pub fn affine(a: &[Vec<f64>], b: &[f64]) -> Self {
        let n = b.len();
        let vars = numbered_vars("x", n);
        let components = (0..n)
            .map(|i| {
                let mut e = Expr::c(b[i]);
                for j in 0..n {
                    if a[i][j] != 0.0 {
                        e = e + Expr::c(a[i][j]) * Expr::var(&vars[j]);
                    }
                }
                e
            })
            .collect();
        Self { components, vars }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// `[X, Y]^i = X^j ∂_j Y^i − Y^j ∂_j X^i`.
    pub fn bracket(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        let components = (0..self.dim())
            .map(|i| {
                let mut e = Expr::c(0.0);
                for (j, v) in self.vars.iter().enumerate() {
                    e = e + self.components[j].clone() * other.components[i].derivative(v)
                        - other.components[j].clone() * self.components[i].derivative(v);
                }
                e
            })
            .collect();
        Self { components, vars: self.vars.clone() }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.series_at(x, 0).iter().map(|s| *s.constant_term()).collect()
    }

    fn series_at(&self, x0: &[f64], order: usize) -> Vec<TruncatedSeries> {
        let params = BTreeMap::new();
        self.components
            .iter()
            .map(|c| eval_series(c, &self.vars, x0, &params, order).expect("polynomials evaluate everywhere"))
            .collect()
    }
}

/// A point of `J^k(V)`: base point `x` and raw partials `u_M = ∂^M u(x)` for
/// `|M| ≤ k`, indexed by the graded-lex layout.
#[derive(Clone, Debug)]
pub struct FunctionJetPoint {
    x: Vec<f64>,
    layout: Arc<SeriesLayout>,
    values: Vec<f64>,
}

impl FunctionJetPoint {
    pub fn new(x: Vec<f64>, order: usize, values: Vec<f64>) -> Result<Self, AffineError> {
        let layout = SeriesLayout::new(x.len(), order);
        if values.len() != layout.len() {
            return Err(AffineError::DimensionMismatch { expected: layout.len(), found: values.len() });
        }
        Ok(Self { x, layout, values })
    }

    /// The `k`-jet of a function given as a series at its basepoint.
    pub fn from_series(s: &TruncatedSeries) -> Self {
        let layout = s.layout().clone();
        let values = layout.monomials().iter().map(|m| s.derivative(m).unwrap()).collect();
        Self { x: s.basepoint().to_vec(), layout, values }
    }

    /// Coordinates uniform in `[-1, 1]`.
    pub fn random(n: usize, order: usize, rng: &mut impl Rng) -> Self {
        let layout = SeriesLayout::new(n, order);
        let x = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let values = (0..layout.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self { x, layout, values }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn order(&self) -> usize {
        self.layout.order()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn layout(&self) -> &Arc<SeriesLayout> {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, m: &MultiIndex) -> f64 {
        self.values[self.layout.index_of(m).expect("multi-index within jet order")]
    }

    /// Dimension of `J^k(V)`: `n` base coordinates plus every `u_M`.
    pub fn space_dim(&self) -> usize {
        self.x.len() + self.values.len()
    }
}

/// A tangent vector to `J^k(V)`, split as for [`FunctionJetPoint`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProlongedVector {
    pub x_part: Vec<f64>,
    /// Component along `∂/∂u_M`; entry 0 is the `u` direction.
    pub jet_part: Vec<f64>,
}

impl ProlongedVector {
    pub fn coordinates(&self) -> Vec<f64> {
        self.x_part.iter().chain(&self.jet_part).copied().collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coordinates().iter().zip(other.coordinates()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Coefficient of the prolonged field on `∂/∂u_J`: linear in the `u_M`, with
/// coefficients that are series in `x`. Keyed by layout index of `M`.
type LinearForm = BTreeMap<usize, TruncatedSeries>;

/// `pr^{(k)} X` for a vector field `X` that does not act on `u`.
#[derive(Clone, Debug)]
pub struct Prolongation {
    field: PolyVectorField,
    order: usize,
}

pub fn prolong(field: &PolyVectorField, order: usize) -> Prolongation {
    Prolongation { field: field.clone(), order }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Path {
    Last,
    #[cfg_attr(not(test), allow(dead_code))]
    First,
}

impl Prolongation {
    pub fn field(&self) -> &PolyVectorField {
        &self.field
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient forms at `x0` by `φ_{J+e_j} = D_j φ_J − u_{J+e_i} ∂_j a^i`.
    /// Forms at level `m` are kept to series order `k + 1 − m`, enough for one
    /// more `x`-derivative at every level.
    fn forms_at(&self, x0: &[f64], path: Path) -> Vec<LinearForm> {
        let n = self.field.dim();
        let k = self.order;
        let jet = SeriesLayout::new(n, k);
        let a = self.field.series_at(x0, k + 1);
        let level_layout: Vec<Arc<SeriesLayout>> =
            (0..=k).map(|m| SeriesLayout::new(n, (k + 1).saturating_sub(m))).collect();
        // ∂_j a^i at each level
        let da = |m: usize, i: usize, j: usize| a[i].derivative_into(&MultiIndex::unit(n, j), &level_layout[m]);

        let mut forms: Vec<LinearForm> = vec![LinearForm::new(); jet.len()];
        for target in 1..jet.len() {
            let t = jet.monomial(target).clone();
            let m = t.order() as usize;
            let j = match path {
                Path::Last => t.last_nonzero(),
                Path::First => t.first_nonzero(),
            }
            .unwrap();
            let base = t.minus(j).unwrap();
            let lay = &level_layout[m];
            let mut form = LinearForm::new();
            let mut add = |idx: usize, s: TruncatedSeries| match form.remove(&idx) {
                Some(prev) => {
                    form.insert(idx, prev + s);
                }
                None => {
                    form.insert(idx, s);
                }
            };
            // D_j φ_base
            for (&mi, c) in &forms[jet.index_of(&base).unwrap()] {
                add(mi, c.derivative_into(&MultiIndex::unit(n, j), lay));
                let shifted = jet.index_of(&jet.monomial(mi).plus(j)).unwrap();
                add(shifted, c.truncate_into(lay));
            }
            for i in 0..n {
                add(jet.index_of(&base.plus(i)).unwrap(), -da(m, i, j));
            }
            forms[target] = form;
        }
        forms
    }

    fn check_point(&self, jp: &FunctionJetPoint) -> Result<(), AffineError> {
        if jp.dim() != self.field.dim() {
            return Err(AffineError::DimensionMismatch { expected: self.field.dim(), found: jp.dim() });
        }
        if jp.order() < self.order {
            return Err(AffineError::InsufficientJetOrder { needed: self.order, found: jp.order() });
        }
        Ok(())
    }

    fn evaluate_forms(&self, forms: &[LinearForm], jp: &FunctionJetPoint) -> Vec<f64> {
        let jet = SeriesLayout::new(jp.dim(), self.order);
        forms
            .iter()
            .map(|f| f.iter().map(|(&mi, c)| c.constant_term() * jp.value(jet.monomial(mi))).sum())
            .collect()
    }

    /// The prolonged vector at a jet point (of order at least `k`; higher
    /// entries are ignored).
    pub fn at(&self, jp: &FunctionJetPoint) -> Result<ProlongedVector, AffineError> {
        self.at_with(jp, Path::Last)
    }

    fn at_with(&self, jp: &FunctionJetPoint, path: Path) -> Result<ProlongedVector, AffineError> {
        self.check_point(jp)?;
        let forms = self.forms_at(jp.x(), path);
        Ok(ProlongedVector { x_part: self.field.eval(jp.x()), jet_part: self.evaluate_forms(&forms, jp) })
    }

    /// `[pr X, pr Y]` at a jet point, computed from the two prolongations
    /// without prolonging the bracket.
    pub fn bracket_at(&self, other: &Self, jp: &FunctionJetPoint) -> Result<ProlongedVector, AffineError> {
        assert_eq!(self.order, other.order, "bracket_at: prolongation orders differ");
        self.check_point(jp)?;
        other.check_point(jp)?;
        let n = jp.dim();
        let jet = SeriesLayout::new(n, self.order);
        let (fp, fq) = (self.forms_at(jp.x(), Path::Last), other.forms_at(jp.x(), Path::Last));
        let (vp, vq) = (self.evaluate_forms(&fp, jp), other.evaluate_forms(&fq, jp));
        let (ap, aq) = (self.field.series_at(jp.x(), 1), other.field.series_at(jp.x(), 1));
        let xp: Vec<f64> = ap.iter().map(|s| *s.constant_term()).collect();
        let xq: Vec<f64> = aq.iter().map(|s| *s.constant_term()).collect();

        let x_part = (0..n)
            .map(|i| {
                let g_q = aq[i].gradient();
                let g_p = ap[i].gradient();
                (0..n).map(|j| xp[j] * g_q[j] - xq[j] * g_p[j]).sum()
            })
            .collect();
        // P(Q_J): x-derivatives of the coefficients plus u-derivatives of the form.
        let apply = |x_dir: &[f64], v_dir: &[f64], forms: &LinearForm| -> f64 {
            forms
                .iter()
                .map(|(&mi, c)| {
                    let g = c.gradient();
                    let along_x: f64 = (0..n).map(|j| x_dir[j] * g[j]).sum();
                    along_x * jp.value(jet.monomial(mi)) + c.constant_term() * v_dir[mi]
                })
                .sum()
        };
        let jet_part = (0..jet.len()).map(|t| apply(&xp, &vp, &fq[t]) - apply(&xq, &vq, &fp[t])).collect();
        Ok(ProlongedVector { x_part, jet_part })
    }
}

/// Lie derivative of `σ₂ = u_ij dx^i dx^j` along `pr² X` at a jet point:
/// `φ_ij + u_lj ∂_i a^l + u_il ∂_j a^l`, which equals `−∂_ij a^s u_s`.
pub fn lie_derivative_sigma2(field: &PolyVectorField, jp: &FunctionJetPoint) -> Result<SymTensor, AffineError> {
    if jp.order() < 2 {
        return Err(AffineError::InsufficientJetOrder { needed: 2, found: jp.order() });
    }
    let n = field.dim();
    let pr = prolong(field, 2).at(jp)?;
    let jet = SeriesLayout::new(n, 2);
    let a = field.series_at(jp.x(), 1);
    let grads: Vec<Vec<f64>> = a.iter().map(|s| s.gradient()).collect();
    let u2 = |i: usize, j: usize| jp.value(&MultiIndex::from_indices(n, &[i, j]));
    Ok(SymTensor::from_fn(n, 2, |m| {
        let idx = m.to_indices();
        let (i, j) = (idx[0], idx[1]);
        let phi = pr.jet_part[jet.index_of(m).unwrap()];
        phi + (0..n).map(|l| u2(l, j) * grads[l][i] + u2(i, l) * grads[l][j]).sum::<f64>()
    }))
}

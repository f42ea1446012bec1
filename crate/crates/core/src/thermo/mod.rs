//! Gases: a chart `e(T, p)`, `v(T, p)` of the Lagrangian surface with
//! `x = (e, v)`, `λ = (−1/T, −p/T)`.
//!
//! All quantities are computed as series in `(T, p)` around the evaluation
//! point, so total derivatives `D_T`, `D_p` act on them directly.

mod generators;
mod invariants;

pub use generators::{generator_fields, generator_flow, generator_rank, prolonged_generators, GENERATOR_NAMES};
pub use invariants::{
    constant_cp_family, ideal_gas_test, random_gas, Admissibility, IdealGasReport, SubgroupInvariants, ThermoInvariants,
    ThermoSyzygies, IDEAL_GAS_TOL,
};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::frame::{ChartJet, FrameError, LagrangianFamily};
use crate::jets::{eval_series, Env, Expr, JetError, MultiIndex, TruncatedSeries};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermoError {
    #[error("temperature is zero")]
    ZeroTemperature,
    #[error("pressure is zero")]
    ZeroPressure,
    #[error("denominator {0} vanishes")]
    SingularDenominator(String),
    #[error("J1 and J2 are functionally dependent here; Tresse derivatives are undefined")]
    TresseDegenerate,
    #[error("gas chart may only use the variables T and p, found {0}")]
    BadVariable(String),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// A gas given by `e(T, p)` and `v(T, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GasChart {
    e: Expr,
    v: Expr,
    params: BTreeMap<String, f64>,
}

fn tp_vars() -> Vec<String> {
    vec!["T".to_string(), "p".to_string()]
}

impl GasChart {
    pub fn new(e: Expr, v: Expr, params: BTreeMap<String, f64>) -> Result<Self, ThermoError> {
        for ex in [&e, &v] {
            if let Some(x) = ex.variables().into_iter().find(|x| x != "T" && x != "p") {
                return Err(ThermoError::BadVariable(x));
            }
            if let Some(x) = ex.parameters().into_iter().find(|x| !params.contains_key(x)) {
                return Err(JetError::UnboundName(x).into());
            }
        }
        Ok(Self { e, v, params })
    }

    /// `e = C₁T`, `v = C₂T/p`.
    pub fn ideal(c1: f64, c2: f64) -> Self {
        let (t, p) = (Expr::var("T"), Expr::var("p"));
        Self { e: Expr::c(c1) * t.clone(), v: Expr::c(c2) * t / p, params: BTreeMap::new() }
    }

    pub fn e(&self) -> &Expr {
        &self.e
    }

    pub fn v(&self) -> &Expr {
        &self.v
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// Jets of `e` and `v` at `(T, p)` through `order`.
    pub fn jet(&self, t: f64, p: f64, order: usize) -> Result<GasJet, ThermoError> {
        if t == 0.0 {
            return Err(ThermoError::ZeroTemperature);
        }
        let vars = tp_vars();
        let e = eval_series(&self.e, &vars, &[t, p], &self.params, order)?;
        let v = eval_series(&self.v, &vars, &[t, p], &self.params, order)?;
        Ok(GasJet::from_series(e, v))
    }

    pub fn lagrangian_residual(&self, t: f64, p: f64) -> Result<f64, ThermoError> {
        Ok(self.jet(t, p, 2)?.lagrangian_residual())
    }

    pub fn affine_invariants(&self, t: f64, p: f64) -> Result<[f64; 5], ThermoError> {
        self.jet(t, p, GasJet::DEFAULT_ORDER)?.affine_invariants()
    }

    pub fn sigma2(&self, t: f64, p: f64) -> Result<[[f64; 2]; 2], ThermoError> {
        Ok(self.jet(t, p, 2)?.sigma2())
    }

    pub fn invariants(&self, t: f64, p: f64) -> Result<ThermoInvariants, ThermoError> {
        self.jet(t, p, GasJet::DEFAULT_ORDER)?.invariants()
    }
}

impl LagrangianFamily for GasChart {
    fn dim(&self) -> usize {
        2
    }

    fn chart_jet(&self, lambda0: &[f64], order: usize) -> Result<ChartJet, FrameError> {
        if lambda0.len() != 2 {
            return Err(FrameError::DimensionMismatch { expected: 2, found: lambda0.len() });
        }
        let (t, p) = lambda_to_tp(lambda0).map_err(|e| FrameError::Internal(e.to_string()))?;
        self.jet(t, p, order).and_then(|j| j.to_chart()).map_err(|e| match e {
            ThermoError::Frame(f) => f,
            ThermoError::Jet(j) => FrameError::Jet(j),
            other => FrameError::Internal(other.to_string()),
        })
    }
}

/// `(T, p) ↦ (λ₁, λ₂) = (−1/T, −p/T)`.
pub fn tp_to_lambda(t: f64, p: f64) -> Result<[f64; 2], ThermoError> {
    if t == 0.0 {
        return Err(ThermoError::ZeroTemperature);
    }
    Ok([-1.0 / t, -p / t])
}

/// `(λ₁, λ₂) ↦ (T, p) = (−1/λ₁, λ₂/λ₁)`.
pub fn lambda_to_tp(lambda: &[f64]) -> Result<(f64, f64), ThermoError> {
    if lambda[0] == 0.0 {
        // λ₁ = 0 is T = ∞
        return Err(JetError::SingularEvaluation("λ₁ = 0".into()).into());
    }
    Ok((-1.0 / lambda[0], lambda[1] / lambda[0]))
}

/// `∂_i s`, zero-padded back into the layout of `s`.
///
/// The top degree of the result is not a true coefficient; every quantity
/// below is read only at low degree, well inside the valid range.
pub(crate) fn d(s: &TruncatedSeries, i: usize) -> TruncatedSeries {
    let lay = s.layout();
    if lay.order() == 0 {
        return s.zero_like();
    }
    let part = s.partial(i).expect("order checked");
    let coeffs = lay.monomials().iter().map(|m| part.coeff(m).copied().unwrap_or(0.0)).collect();
    TruncatedSeries::from_coeffs(lay, s.basepoint(), coeffs)
}

/// Jets of `e`, `v` at a point `(T₀, p₀)`, as series in `(T, p)`.
#[derive(Clone, Debug)]
pub struct GasJet {
    t: TruncatedSeries,
    p: TruncatedSeries,
    e: TruncatedSeries,
    v: TruncatedSeries,
}

impl GasJet {
    /// Enough for third derivatives of `e`, `v` with a spare order.
    pub const DEFAULT_ORDER: usize = 4;

    pub fn from_series(e: TruncatedSeries, v: TruncatedSeries) -> Self {
        let lay = e.layout().clone();
        let bp = e.basepoint().to_vec();
        let t = TruncatedSeries::variable(&lay, &bp, 0);
        let p = TruncatedSeries::variable(&lay, &bp, 1);
        Self { t, p, e, v }
    }

    /// The gas side of a chart jet: `e(T, p) = x¹(λ(T, p))`, same for `v`.
    pub fn from_chart(c: &ChartJet) -> Result<Self, ThermoError> {
        if c.dim() != 2 {
            return Err(FrameError::DimensionMismatch { expected: 2, found: c.dim() }.into());
        }
        let l0 = c.lambda();
        let (t0, p0) = lambda_to_tp(l0)?;
        let vars = TruncatedSeries::variables(2, c.order(), &[t0, p0]);
        let pin = |s: TruncatedSeries, c0: f64| {
            let mut co = s.coeffs().to_vec();
            co[0] = c0;
            TruncatedSeries::from_coeffs(s.layout(), s.basepoint(), co)
        };
        let l1 = pin(-vars[0].recip(), l0[0]);
        let l2 = pin(-(vars[1].clone() / vars[0].clone()), l0[1]);
        let e = TruncatedSeries::compose(&c.x_series()[0], &[l1.clone(), l2.clone()])?;
        let v = TruncatedSeries::compose(&c.x_series()[1], &[l1, l2])?;
        Ok(Self::from_series(e, v))
    }

    /// The `(λ, x)` chart jet of this gas at `λ₀ = (−1/T₀, −p₀/T₀)`.
    pub fn to_chart(&self) -> Result<ChartJet, ThermoError> {
        let (t0, p0) = self.point();
        let l0 = tp_to_lambda(t0, p0)?;
        let vars = TruncatedSeries::variables(2, self.order(), &l0);
        let pin = |s: TruncatedSeries, c0: f64| {
            let mut co = s.coeffs().to_vec();
            co[0] = c0;
            TruncatedSeries::from_coeffs(s.layout(), s.basepoint(), co)
        };
        let t = pin(-vars[0].recip(), t0);
        let p = pin(vars[1].clone() / vars[0].clone(), p0);
        let x1 = TruncatedSeries::compose(&self.e, &[t.clone(), p.clone()])?;
        let x2 = TruncatedSeries::compose(&self.v, &[t, p])?;
        Ok(ChartJet::from_parts(l0.to_vec(), vec![x1, x2])?)
    }

    pub fn point(&self) -> (f64, f64) {
        (self.t.value(), self.p.value())
    }

    pub fn order(&self) -> usize {
        self.e.order()
    }

    pub fn e_series(&self) -> &TruncatedSeries {
        &self.e
    }

    pub fn v_series(&self) -> &TruncatedSeries {
        &self.v
    }

    /// `∂^J e` and `∂^J v` at the point, `J = (j_T, j_p)`.
    pub fn partials(&self, jt: u32, jp: u32) -> (f64, f64) {
        let m = MultiIndex::new(vec![jt, jp]);
        (self.e.derivative(&m).unwrap_or(0.0), self.v.derivative(&m).unwrap_or(0.0))
    }

    /// `(T, p, e, v, e_T, e_p, v_T, v_p)`.
    pub fn first_jet(&self) -> [f64; 8] {
        let (t, p) = self.point();
        let (e, v) = self.partials(0, 0);
        let (et, vt) = self.partials(1, 0);
        let (ep, vp) = self.partials(0, 1);
        [t, p, e, v, et, ep, vt, vp]
    }

    pub(crate) fn fields(&self) -> Fields {
        let (e, v) = (self.e.clone(), self.v.clone());
        let (et, ep, vt, vp) = (d(&e, 0), d(&e, 1), d(&v, 0), d(&v, 1));
        Fields {
            t: self.t.clone(),
            p: self.p.clone(),
            ett: d(&et, 0),
            vtt: d(&vt, 0),
            vtp: d(&vt, 1),
            vpp: d(&vp, 1),
            e,
            v,
            et,
            ep,
            vt,
            vp,
        }
    }

    /// `F = e_p + T v_T + p v_p`.
    pub fn lagrangian_residual(&self) -> f64 {
        self.fields().f().value()
    }

    /// `σ₂` in the `(dT, dp)` basis.
    pub fn sigma2(&self) -> [[f64; 2]; 2] {
        let f = self.fields();
        let (t, vt, vp, i2) = (f.t.value(), f.vt.value(), f.vp.value(), f.i2().value());
        [[i2 / (t * t), -vt / t], [-vt / t, -vp / t]]
    }

    pub fn affine_invariants(&self) -> Result<[f64; 5], ThermoError> {
        let s = self.fields().affine_series()?;
        Ok([s[0].value(), s[1].value(), s[2].value(), s[3].value(), s[4].value()])
    }

    pub fn invariants(&self) -> Result<ThermoInvariants, ThermoError> {
        invariants::thermo_invariants(self)
    }

    /// `∇₁ = −T D_T` applied to a function given as a series.
    pub fn nabla1(&self, s: &TruncatedSeries) -> f64 {
        self.fields().nabla1(s).value()
    }

    /// `∇₁(I₂)`; on Lagrangian gases this equals `I₃₁`.
    pub fn nabla1_i2(&self) -> f64 {
        let f = self.fields();
        f.nabla1(&f.i2()).value()
    }

    /// `∇₂ = (T v_T D_T + (e_T + p v_T) D_p) / ((e_T v_TT − e_TT v_T) T)`.
    pub fn nabla2(&self, s: &TruncatedSeries) -> Result<f64, ThermoError> {
        Ok(self.fields().nabla2(s)?.value())
    }

    /// The same gas after the affine map `g` of `(e, v)`, at the moved point.
    pub fn transport(&self, g: &crate::affine::AffineElement) -> Result<Self, ThermoError> {
        Self::from_chart(&self.to_chart()?.transport(g)?)
    }

    /// Evaluates an expression in `T`, `p`, `e`, `v` as a series.
    pub fn eval(&self, ex: &Expr) -> Result<TruncatedSeries, ThermoError> {
        let vars: Vec<String> = ["T", "p", "e", "v"].iter().map(|s| s.to_string()).collect();
        let values = [self.t.clone(), self.p.clone(), self.e.clone(), self.v.clone()];
        let params = BTreeMap::new();
        Ok(ex.eval(&Env { vars: &vars, values: &values, params: &params })?)
    }
}

/// `T, p, e, v` and the partials the invariants use, all as series.
pub(crate) struct Fields {
    pub t: TruncatedSeries,
    pub p: TruncatedSeries,
    pub e: TruncatedSeries,
    pub v: TruncatedSeries,
    pub et: TruncatedSeries,
    pub ep: TruncatedSeries,
    pub vt: TruncatedSeries,
    pub vp: TruncatedSeries,
    pub ett: TruncatedSeries,
    pub vtt: TruncatedSeries,
    pub vtp: TruncatedSeries,
    pub vpp: TruncatedSeries,
}

fn nonzero(s: TruncatedSeries, scale: f64, name: &str) -> Result<TruncatedSeries, ThermoError> {
    if s.value().abs() <= 1e-13 * scale.max(1e-300) || !s.value().is_finite() {
        return Err(ThermoError::SingularDenominator(name.to_string()));
    }
    Ok(s)
}

impl Fields {
    pub fn f(&self) -> TruncatedSeries {
        self.ep.clone() + self.t.clone() * self.vt.clone() + self.p.clone() * self.vp.clone()
    }

    pub fn i2(&self) -> TruncatedSeries {
        self.p.clone() * self.vt.clone() + self.et.clone()
    }

    /// `e_p v_T − e_T v_p`.
    pub fn d1(&self) -> Result<TruncatedSeries, ThermoError> {
        let (a, b) = (self.ep.clone() * self.vt.clone(), self.et.clone() * self.vp.clone());
        let scale = a.value().abs().max(b.value().abs());
        nonzero(a - b, scale, "e_p v_T − e_T v_p")
    }

    /// `e_T v_TT − e_TT v_T`.
    pub fn d2_raw(&self) -> TruncatedSeries {
        self.et.clone() * self.vtt.clone() - self.ett.clone() * self.vt.clone()
    }

    pub fn d2(&self) -> Result<TruncatedSeries, ThermoError> {
        let (a, b) = (self.et.clone() * self.vtt.clone(), self.ett.clone() * self.vt.clone());
        let scale = a.value().abs().max(b.value().abs());
        nonzero(a - b, scale, "e_T v_TT − e_TT v_T")
    }

    /// `[I₂, I₃₁, I₃₂, I₃₃, I₃₄]`.
    pub fn affine_series(&self) -> Result<[TruncatedSeries; 5], ThermoError> {
        let (t, p) = (self.t.clone(), self.p.clone());
        let (vt, vp, vtt, vtp, vpp) = (self.vt.clone(), self.vp.clone(), self.vtt.clone(), self.vtp.clone(), self.vpp.clone());
        let c = |x: f64| t.constant_like(x);
        let d1 = self.d1()?;
        let d2 = self.d2_raw();
        let i2 = self.i2();
        let i31 = -(t.clone() * (p.clone() * vtt.clone() + self.ett.clone()));
        let i32 = d2.clone() * d2.clone() * t.powi(3) / d1.clone();
        let i33 = (c(2.0) * t.clone() * vt.clone() * i2.clone() * vtt.clone()
            + i2.powi(2) * vtp.clone()
            + vt.powi(2) * (i2.clone() + i31.clone()))
            * t.clone()
            / d1.clone();
        let i34 = t.powi(2)
            * (c(3.0) * t.powi(2) * vt.powi(2) * i2.clone() * vtt
                + c(3.0) * t.clone() * vt.clone() * i2.powi(2) * vtp
                + i2.powi(3) * vpp
                + t.clone() * vt.powi(3) * i31.clone()
                + c(4.0) * t.clone() * vt.powi(3) * i2.clone()
                + c(3.0) * vt * vp * i2.powi(2))
            * d2
            / d1.powi(2);
        Ok([i2, i31, i32, i33, i34])
    }

    pub fn nabla1(&self, s: &TruncatedSeries) -> TruncatedSeries {
        -(self.t.clone() * d(s, 0))
    }

    pub fn nabla2(&self, s: &TruncatedSeries) -> Result<TruncatedSeries, ThermoError> {
        let den = self.d2()? * self.t.clone();
        Ok((self.t.clone() * self.vt.clone() * d(s, 0) + self.i2() * d(s, 1)) / den)
    }
}

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;

use super::{JetError, SeriesLayout, TruncatedSeries};
use crate::scalar::Scalar;

/// Expression tree for potentials, charts and equations of state.
///
/// `Var` names are the coordinates a series is expanded in; `Param` names are
/// constants bound at evaluation time.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Param(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Sqrt(Box<Expr>),
}

/// Values bound to the names in an expression.
#[derive(Clone, Debug)]
pub struct Env<'a, S> {
    pub vars: &'a [String],
    pub values: &'a [S],
    pub params: &'a BTreeMap<String, f64>,
}

impl Expr {
    pub fn c(v: f64) -> Self {
        Expr::Const(v)
    }

    pub fn var(name: &str) -> Self {
        Expr::Var(name.to_string())
    }

    pub fn param(name: &str) -> Self {
        Expr::Param(name.to_string())
    }

    pub fn pow(self, exponent: Expr) -> Self {
        Expr::Pow(Box::new(self), Box::new(exponent))
    }

    pub fn powi(self, k: i32) -> Self {
        self.pow(Expr::c(k as f64))
    }

    pub fn exp(self) -> Self {
        Expr::Exp(Box::new(self))
    }

    pub fn ln(self) -> Self {
        Expr::Ln(Box::new(self))
    }

    pub fn sqrt(self) -> Self {
        Expr::Sqrt(Box::new(self))
    }

    /// Names of all `Var` nodes.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Var(n) = e {
                out.insert(n.clone());
            }
        });
        out
    }

    /// Names of all `Param` nodes.
    pub fn parameters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Param(n) = e {
                out.insert(n.clone());
            }
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Neg(a) | Expr::Exp(a) | Expr::Ln(a) | Expr::Sqrt(a) => a.visit(f),
        }
    }

    fn depends_on(&self, var: &str) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Var(n) if n == var) {
                found = true;
            }
        });
        found
    }

    /// Replaces `Var` nodes by expressions.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        let sub = |e: &Expr| Box::new(e.substitute(map));
        match self {
            Expr::Var(n) => map.get(n).cloned().unwrap_or_else(|| self.clone()),
            Expr::Const(_) | Expr::Param(_) => self.clone(),
            Expr::Add(a, b) => Expr::Add(sub(a), sub(b)),
            Expr::Sub(a, b) => Expr::Sub(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::Mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::Div(sub(a), sub(b)),
            Expr::Pow(a, b) => Expr::Pow(sub(a), sub(b)),
            Expr::Neg(a) => Expr::Neg(sub(a)),
            Expr::Exp(a) => Expr::Exp(sub(a)),
            Expr::Ln(a) => Expr::Ln(sub(a)),
            Expr::Sqrt(a) => Expr::Sqrt(sub(a)),
        }
    }

    /// Symbolic partial derivative with respect to a variable; parameters are constants.
    pub fn derivative(&self, var: &str) -> Expr {
        if !self.depends_on(var) {
            return Expr::c(0.0);
        }
        let d = |e: &Expr| e.derivative(var);
        match self {
            Expr::Const(_) | Expr::Param(_) => Expr::c(0.0),
            Expr::Var(_) => Expr::c(1.0),
            Expr::Add(a, b) => simp_add(d(a), d(b)),
            Expr::Sub(a, b) => simp_sub(d(a), d(b)),
            Expr::Mul(a, b) => simp_add(simp_mul(d(a), (**b).clone()), simp_mul((**a).clone(), d(b))),
            Expr::Div(a, b) => {
                let num = simp_sub(simp_mul(d(a), (**b).clone()), simp_mul((**a).clone(), d(b)));
                Expr::Div(Box::new(num), Box::new((**b).clone().powi(2)))
            }
            Expr::Neg(a) => simp_neg(d(a)),
            Expr::Pow(base, ex) => {
                if !ex.depends_on(var) {
                    // e * b^(e-1) * b'
                    let lowered = Expr::Pow(base.clone(), Box::new(simp_sub((**ex).clone(), Expr::c(1.0))));
                    simp_mul(simp_mul((**ex).clone(), lowered), d(base))
                } else {
                    // b^e * (e' ln b + e b'/b)
                    let t1 = simp_mul(d(ex), (**base).clone().ln());
                    let t2 = Expr::Div(Box::new(simp_mul((**ex).clone(), d(base))), base.clone());
                    simp_mul(self.clone(), simp_add(t1, t2))
                }
            }
            Expr::Exp(a) => simp_mul(self.clone(), d(a)),
            Expr::Ln(a) => Expr::Div(Box::new(d(a)), a.clone()),
            Expr::Sqrt(a) => Expr::Div(Box::new(d(a)), Box::new(simp_mul(Expr::c(2.0), self.clone()))),
        }
    }

    /// Evaluates over any scalar ring. Singularities are judged on the
    /// constant part of the operand.
    pub fn eval<S: Scalar>(&self, env: &Env<'_, S>) -> Result<S, JetError> {
        let proto = env.values.first().ok_or(JetError::UnboundName("<no variables>".into()))?;
        self.eval_with(env, proto)
    }

    fn eval_with<S: Scalar>(&self, env: &Env<'_, S>, proto: &S) -> Result<S, JetError> {
        let ev = |e: &Expr| e.eval_with(env, proto);
        Ok(match self {
            Expr::Const(c) => proto.constant_like(*c),
            Expr::Var(n) => {
                let i = env.vars.iter().position(|v| v == n).ok_or_else(|| JetError::UnboundName(n.clone()))?;
                env.values[i].clone()
            }
            Expr::Param(n) => {
                let v = env.params.get(n).ok_or_else(|| JetError::UnboundName(n.clone()))?;
                proto.constant_like(*v)
            }
            Expr::Add(a, b) => ev(a)? + ev(b)?,
            Expr::Sub(a, b) => ev(a)? - ev(b)?,
            Expr::Mul(a, b) => ev(a)? * ev(b)?,
            Expr::Div(a, b) => {
                let den = ev(b)?;
                if den.value() == 0.0 || !den.value().is_finite() {
                    return Err(JetError::SingularEvaluation(format!("division by {} in {}", den.value(), self)));
                }
                ev(a)? / den
            }
            Expr::Neg(a) => -ev(a)?,
            Expr::Pow(base, ex) => {
                let b = ev(base)?;
                if let Some(k) = ex.constant_value(env.params).filter(|k| k.fract() == 0.0 && k.abs() <= 64.0) {
                    if k < 0.0 && b.value() == 0.0 {
                        return Err(JetError::SingularEvaluation(format!("negative power of zero in {self}")));
                    }
                    b.powi(k as i32)
                } else {
                    if b.value() <= 0.0 {
                        return Err(JetError::SingularEvaluation(format!(
                            "non-integer power of non-positive base {} in {}",
                            b.value(),
                            self
                        )));
                    }
                    match ex.constant_value(env.params) {
                        Some(q) => b.powf(q),
                        None => (b.ln() * ev(ex)?).exp(),
                    }
                }
            }
            Expr::Exp(a) => ev(a)?.exp(),
            Expr::Ln(a) => {
                let x = ev(a)?;
                if x.value() <= 0.0 {
                    return Err(JetError::SingularEvaluation(format!("ln of non-positive value {} in {}", x.value(), self)));
                }
                x.ln()
            }
            Expr::Sqrt(a) => {
                let x = ev(a)?;
                if x.value() <= 0.0 {
                    return Err(JetError::SingularEvaluation(format!("sqrt at non-positive value {} in {}", x.value(), self)));
                }
                x.powf(0.5)
            }
        })
    }

    /// Value of a variable-free subexpression, if every parameter is bound.
    fn constant_value(&self, params: &BTreeMap<String, f64>) -> Option<f64> {
        if !self.variables().is_empty() {
            return None;
        }
        let vars: [String; 0] = [];
        let values = [0.0f64];
        let env = Env { vars: &vars, values: &values, params };
        self.eval_with(&env, &0.0).ok()
    }

    /// Value at a point for plain `f64` inputs.
    pub fn eval_f64(&self, vars: &[String], point: &[f64], params: &BTreeMap<String, f64>) -> Result<f64, JetError> {
        if vars.is_empty() {
            return self.constant_value(params).ok_or_else(|| {
                self.variables()
                    .into_iter()
                    .next()
                    .or_else(|| self.parameters().into_iter().find(|p| !params.contains_key(p)))
                    .map(JetError::UnboundName)
                    .unwrap_or_else(|| JetError::SingularEvaluation(self.to_string()))
            });
        }
        self.eval(&Env { vars, values: point, params })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if *c < 0.0 => 3,
            _ => 5,
        }
    }
}

/// Taylor coefficients of `e` at `point` through `order`, with `vars[i]`
/// mapped to the i-th coordinate.
pub fn eval_series(
    e: &Expr,
    vars: &[String],
    point: &[f64],
    params: &BTreeMap<String, f64>,
    order: usize,
) -> Result<TruncatedSeries, JetError> {
    if vars.len() != point.len() {
        return Err(JetError::DimensionMismatch { expected: vars.len(), found: point.len() });
    }
    let layout = SeriesLayout::new(vars.len(), order);
    let values: Vec<TruncatedSeries> =
        (0..vars.len()).map(|i| TruncatedSeries::variable(&layout, point, i)).collect();
    e.eval(&Env { vars, values: &values, params })
}

/// `["{prefix}1", …, "{prefix}n"]`.
pub fn numbered_vars(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 1.0)
}

fn simp_add(a: Expr, b: Expr) -> Expr {
    match (is_zero(&a), is_zero(&b)) {
        (true, _) => b,
        (_, true) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn simp_sub(a: Expr, b: Expr) -> Expr {
    match (is_zero(&a), is_zero(&b)) {
        (_, true) => a,
        (true, _) => simp_neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn simp_neg(a: Expr) -> Expr {
    if is_zero(&a) {
        a
    } else {
        Expr::Neg(Box::new(a))
    }
}

fn simp_mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        return Expr::c(0.0);
    }
    if is_one(&a) {
        return b;
    }
    if is_one(&b) {
        return a;
    }
    Expr::Mul(Box::new(a), Box::new(b))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        fn binary(f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr, p: u8) -> fmt::Result {
            child(f, a, p)?;
            write!(f, " {op} ")?;
            child(f, b, p + 1)
        }
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "-{}", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(n) | Expr::Param(n) => write!(f, "{n}"),
            Expr::Add(a, b) => binary(f, a, "+", b, 1),
            Expr::Sub(a, b) => binary(f, a, "-", b, 1),
            Expr::Mul(a, b) => binary(f, a, "*", b, 2),
            Expr::Div(a, b) => binary(f, a, "/", b, 2),
            Expr::Neg(a) => {
                write!(f, "-")?;
                child(f, a, 3)
            }
            Expr::Pow(a, b) => {
                child(f, a, 5)?;
                write!(f, "^")?;
                child(f, b, 3)
            }
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Ln(a) => write!(f, "ln({a})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}

macro_rules! expr_binop {
    ($tr:ident, $method:ident, $variant:ident) => {
        impl ops::$tr for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
        impl ops::$tr<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$variant(Box::new(self), Box::new(Expr::Const(rhs)))
            }
        }
        impl ops::$tr<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(Expr::Const(self)), Box::new(rhs))
            }
        }
    };
}

expr_binop!(Add, add, Add);
expr_binop!(Sub, sub, Sub);
expr_binop!(Mul, mul, Mul);
expr_binop!(Div, div, Div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_params() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    #[test]
    fn polynomial_expansion() {
        let e = Expr::var("l1").powi(2);
        let s = eval_series(&e, &numbered_vars("l", 1), &[2.0], &no_params(), 3).unwrap();
        assert_eq!(s.coeffs(), &[4.0, 4.0, 1.0, 0.0]);
    }

    #[test]
    fn exponential_series() {
        let e = Expr::var("l1").exp();
        let s = eval_series(&e, &numbered_vars("l", 1), &[0.0], &no_params(), 4).unwrap();
        let expect = [1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0];
        for (a, b) in s.coeffs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn bernoulli_cumulant_function() {
        // ln((1+e^λ)/2) at ln 2: value ln(3/2), slope 2/3, second coeff (1/2)(2/9)
        let e = ((1.0 + Expr::var("l1").exp()) / 2.0).ln();
        let s = eval_series(&e, &numbered_vars("l", 1), &[2f64.ln()], &no_params(), 2).unwrap();
        assert!((s.coeffs()[0] - 1.5f64.ln()).abs() < 1e-15);
        assert!((s.coeffs()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.coeffs()[2] - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn unbound_and_singular() {
        let vars = numbered_vars("l", 1);
        let e = Expr::param("C") * Expr::var("l1");
        assert!(matches!(eval_series(&e, &vars, &[1.0], &no_params(), 1), Err(JetError::UnboundName(n)) if n == "C"));
        let e = Expr::var("l2");
        assert!(matches!(eval_series(&e, &vars, &[1.0], &no_params(), 1), Err(JetError::UnboundName(_))));
        let e = Expr::var("l1").ln();
        assert!(matches!(eval_series(&e, &vars, &[0.0], &no_params(), 1), Err(JetError::SingularEvaluation(_))));
        let e = 1.0 / Expr::var("l1");
        assert!(matches!(eval_series(&e, &vars, &[0.0], &no_params(), 1), Err(JetError::SingularEvaluation(_))));
        let e = Expr::var("l1").pow(Expr::c(0.5));
        assert!(matches!(eval_series(&e, &vars, &[-1.0], &no_params(), 1), Err(JetError::SingularEvaluation(_))));
        // integer powers are fine at negative bases
        let e = Expr::var("l1").powi(3);
        assert_eq!(eval_series(&e, &vars, &[-1.0], &no_params(), 1).unwrap().coeffs(), &[-1.0, 3.0]);
    }

    #[test]
    fn symbolic_derivative_agrees_with_series() {
        let vars = numbered_vars("x", 2);
        let e = (Expr::var("x1") * Expr::var("x2").powi(3) + Expr::var("x1").exp()).ln()
            + Expr::var("x2").sqrt() / Expr::var("x1")
            + Expr::var("x1").pow(Expr::var("x2"));
        let pt = [0.8, 1.3];
        let s = eval_series(&e, &vars, &pt, &no_params(), 2).unwrap();
        for (i, v) in vars.iter().enumerate() {
            let d = e.derivative(v).eval_f64(&vars, &pt, &no_params()).unwrap();
            assert!((d - s.gradient()[i]).abs() < 1e-12, "d/d{v}: {d} vs {}", s.gradient()[i]);
        }
    }

    #[test]
    fn substitution() {
        let e = Expr::var("T") * Expr::var("p");
        let mut map = BTreeMap::new();
        map.insert("T".to_string(), Expr::c(2.0));
        let r = e.substitute(&map);
        let v = r.eval_f64(&["p".to_string()], &[3.0], &no_params()).unwrap();
        assert_eq!(v, 6.0);
    }

    #[test]
    fn display_minimal_parentheses() {
        let e = (Expr::var("a") + Expr::var("b")) * Expr::var("c") - -Expr::var("d").powi(2);
        assert_eq!(e.to_string(), "(a + b) * c - -d^2");
        let e = Expr::var("a") - (Expr::var("b") - Expr::var("c"));
        assert_eq!(e.to_string(), "a - (b - c)");
        let e = Expr::var("a").pow(Expr::var("b").pow(Expr::var("c")));
        assert_eq!(e.to_string(), "a^b^c");
        let e = Expr::var("a").pow(Expr::var("b")).pow(Expr::var("c"));
        assert_eq!(e.to_string(), "(a^b)^c");
        let e = (-Expr::var("a")).powi(2);
        assert_eq!(e.to_string(), "(-a)^2");
    }
}

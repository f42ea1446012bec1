//! The six symmetries of a gas chart: vector fields on `(T, p, e, v)`, their
//! flows as affine maps of `(e, v)`, and their first prolongations.

use super::{GasJet, ThermoError};
use crate::affine::AffineElement;
use crate::jets::Expr;
use crate::linalg;

pub const GENERATOR_NAMES: [&str; 6] = [
    "d_e",
    "d_v",
    "d_p - v d_e",
    "e d_e + T d_T + p d_p",
    "v d_v - p d_p",
    "e d_v + T p d_T + p^2 d_p",
];

/// Components `(ξ^T, ξ^p, η^e, η^v)` of each generator.
pub fn generator_fields() -> Vec<[Expr; 4]> {
    let (t, p, e, v) = (Expr::var("T"), Expr::var("p"), Expr::var("e"), Expr::var("v"));
    let z = || Expr::c(0.0);
    vec![
        [z(), z(), Expr::c(1.0), z()],
        [z(), z(), z(), Expr::c(1.0)],
        [z(), Expr::c(1.0), -v.clone(), z()],
        [t.clone(), p.clone(), e.clone(), z()],
        [z(), -p.clone(), z(), v],
        [t * p.clone(), p.powi(2), z(), e],
    ]
}

/// Time-`s` flow of generator `k` as `x ↦ A x + B` on `x = (e, v)`.
pub fn generator_flow(k: usize, s: f64) -> AffineElement {
    let (a, b) = match k {
        0 => ([[1.0, 0.0], [0.0, 1.0]], [s, 0.0]),
        1 => ([[1.0, 0.0], [0.0, 1.0]], [0.0, s]),
        2 => ([[1.0, -s], [0.0, 1.0]], [0.0, 0.0]),
        3 => ([[s.exp(), 0.0], [0.0, 1.0]], [0.0, 0.0]),
        4 => ([[1.0, 0.0], [0.0, s.exp()]], [0.0, 0.0]),
        5 => ([[1.0, 0.0], [s, 1.0]], [0.0, 0.0]),
        _ => panic!("generator index {k} out of range 0..6"),
    };
    AffineElement::new(a.iter().map(|r| r.to_vec()).collect(), b.to_vec()).expect("flows are invertible")
}

/// First prolongations at a 1-jet `(T, p, e, v, e_T, e_p, v_T, v_p)`, one row per generator.
pub fn prolonged_generators(jet: &[f64; 8]) -> Result<Vec<[f64; 8]>, ThermoError> {
    let vars: Vec<String> = ["T", "p", "e", "v"].iter().map(|s| s.to_string()).collect();
    let point = &jet[..4];
    let params = Default::default();
    // u[a][j]: derivative of e (a = 0) or v (a = 1) by T (j = 0) or p (j = 1)
    let u = [[jet[4], jet[5]], [jet[6], jet[7]]];
    let ev = |ex: &Expr| ex.eval_f64(&vars, point, &params);
    let total = |ex: &Expr, j: usize| -> Result<f64, ThermoError> {
        Ok(ev(&ex.derivative(&vars[j]))? + u[0][j] * ev(&ex.derivative("e"))? + u[1][j] * ev(&ex.derivative("v"))?)
    };
    generator_fields()
        .iter()
        .map(|f| {
            let mut row = [0.0; 8];
            for c in 0..4 {
                row[c] = ev(&f[c])?;
            }
            for a in 0..2 {
                for j in 0..2 {
                    let mut x = total(&f[2 + a], j)?;
                    for i in 0..2 {
                        x -= u[a][i] * total(&f[i], j)?;
                    }
                    row[4 + 2 * a + j] = x;
                }
            }
            Ok(row)
        })
        .collect()
}

/// Rank of the six prolonged generators at the 1-jet of `g`.
pub fn generator_rank(g: &GasJet, rel_tol: f64) -> Result<usize, ThermoError> {
    let rows: Vec<Vec<f64>> = prolonged_generators(&g.first_jet())?.iter().map(|r| r.to_vec()).collect();
    Ok(linalg::numerical_rank(&rows, rel_tol))
}

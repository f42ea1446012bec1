//! Heat capacity and the other affine invariants of a gas, the invariants of
//! the scaling subgroup with their Tresse derivatives, and the ideal-gas test.

use rand::Rng;

use super::{d, lambda_to_tp, GasChart, GasJet, ThermoError};
use crate::frame::{random_admissible_potential, LagrangianFamily};
use crate::jets::{Expr, TruncatedSeries};
use crate::linalg;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Admissibility {
    pub i2_positive: bool,
    pub sigma2_positive_definite: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubgroupInvariants {
    pub j1: f64,
    pub j2: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// `e_T − e_p v_T / v_p`; `None` where `v_p = 0`.
    pub cv: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThermoInvariants {
    pub f: f64,
    pub i2: f64,
    pub i31: f64,
    pub i32: f64,
    pub i33: f64,
    pub i34: f64,
    pub subgroup: SubgroupInvariants,
    /// `σ₂(∇₁,∇₁)`, `σ₂(∇₁,∇₂)`, `σ₂(∇₂,∇₂)`; `None` where `∇₂` is undefined.
    pub sigma2_frame: Option<[f64; 3]>,
    pub admissibility: Admissibility,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThermoSyzygies {
    /// `∇₂(J₁) + ∇₁(J₂) + ∇₂(J₂)` with `∇₁ = T D_T`, `∇₂ = p D_p`.
    pub nabla: f64,
    pub k: [f64; 2],
}

fn scaled_sum(terms: &[f64]) -> f64 {
    let scale = terms.iter().fold(1f64, |m, t| m.max(t.abs()));
    terms.iter().sum::<f64>() / scale
}

pub(crate) fn thermo_invariants(g: &GasJet) -> Result<ThermoInvariants, ThermoError> {
    let f = g.fields();
    let [i2, i31, i32, i33, i34] = g.affine_invariants()?;
    let s = g.sigma2();
    let t = f.t.value();
    let sigma2_frame = f.d2().ok().map(|d2| {
        let n1 = [-t, 0.0];
        let n2 = [t * f.vt.value() / (d2.value() * t), i2 / (d2.value() * t)];
        let q = |a: [f64; 2], b: [f64; 2]| (0..2).map(|i| (0..2).map(|j| a[i] * s[i][j] * b[j]).sum::<f64>()).sum();
        [q(n1, n1), q(n1, n2), q(n2, n2)]
    });
    let sm: Vec<Vec<f64>> = s.iter().map(|r| r.to_vec()).collect();
    Ok(ThermoInvariants {
        f: f.f().value(),
        i2,
        i31,
        i32,
        i33,
        i34,
        subgroup: g.subgroup_invariants()?,
        sigma2_frame,
        admissibility: Admissibility {
            i2_positive: i2 > 0.0,
            sigma2_positive_definite: linalg::is_positive_definite(&sm),
        },
    })
}

impl GasJet {
    /// `[J₁, J₂, K₁, K₂, K₃]` as series.
    fn subgroup_series(&self) -> Result<[TruncatedSeries; 5], ThermoError> {
        let f = self.fields();
        if f.p.value() == 0.0 {
            return Err(ThermoError::ZeroPressure);
        }
        let (t, p) = (f.t.clone(), f.p.clone());
        Ok([
            f.e.clone() / t.clone(),
            p.clone() * f.v.clone() / t.clone(),
            f.et.clone(),
            p.clone() * f.vt.clone(),
            p.powi(2) * f.vp.clone() / t,
        ])
    }

    pub fn subgroup_invariants(&self) -> Result<SubgroupInvariants, ThermoError> {
        let s = self.subgroup_series()?;
        let f = self.fields();
        let vp = f.vp.value();
        let cv = (vp != 0.0).then(|| f.et.value() - f.ep.value() * f.vt.value() / vp);
        Ok(SubgroupInvariants { j1: s[0].value(), j2: s[1].value(), k1: s[2].value(), k2: s[3].value(), k3: s[4].value(), cv })
    }

    /// `T D_T s` and `p D_p s`.
    fn scaling_derivatives(&self, s: &TruncatedSeries) -> [TruncatedSeries; 2] {
        let f = self.fields();
        [f.t.clone() * d(s, 0), f.p.clone() * d(s, 1)]
    }

    /// `M` with `∂̂_i = Σ_a M_ia ∇_a`, `∇₁ = T D_T`, `∇₂ = p D_p`, so that
    /// `∂̂_i(J_j) = δ_ij`.
    pub fn tresse_matrix(&self) -> Result<[[f64; 2]; 2], ThermoError> {
        let s = self.subgroup_series()?;
        let n: Vec<[f64; 2]> =
            (0..2).map(|a| [self.scaling_derivatives(&s[0])[a].value(), self.scaling_derivatives(&s[1])[a].value()]).collect();
        let det = n[0][0] * n[1][1] - n[0][1] * n[1][0];
        let scale = n.iter().flatten().fold(0f64, |m, x| m.max(x.abs()));
        if !(det.abs() > 1e-10 * scale * scale) {
            return Err(ThermoError::TresseDegenerate);
        }
        Ok([[n[1][1] / det, -n[0][1] / det], [-n[1][0] / det, n[0][0] / det]])
    }

    /// `∂̂_i(s)`, `i` 0-based.
    pub fn tresse(&self, i: usize, s: &TruncatedSeries) -> Result<f64, ThermoError> {
        let m = self.tresse_matrix()?;
        let nab = self.scaling_derivatives(s);
        Ok(m[i][0] * nab[0].value() + m[i][1] * nab[1].value())
    }

    /// `∇₂(J₁) + ∇₁(J₂) + ∇₂(J₂)`; equals `pF/T`.
    pub fn nabla_syzygy(&self) -> Result<f64, ThermoError> {
        let s = self.subgroup_series()?;
        let a = self.scaling_derivatives(&s[0]);
        let b = self.scaling_derivatives(&s[1]);
        Ok(scaled_sum(&[a[1].value(), b[0].value(), b[1].value()]))
    }

    pub fn k_syzygies(&self) -> Result<[f64; 2], ThermoError> {
        let s = self.subgroup_series()?;
        let [j1, j2, k1, k2, k3] = [0, 1, 2, 3, 4].map(|i| s[i].value());
        let h = |i: usize, k: usize| self.tresse(i, &s[k]);
        let (h1k1, h2k1, h1k2, h2k2, h1k3, h2k3) = (h(0, 2)?, h(1, 2)?, h(0, 3)?, h(1, 3)?, h(0, 4)?, h(1, 4)?);
        let first = scaled_sum(&[
            (k2 + k3) * h1k1,
            -(j2 + k3) * h2k1,
            (j1 - k1 + k2 + k3) * h1k2,
            -(k2 + k3) * h2k2,
        ]);
        let second = scaled_sum(&[
            -(k2 + k3) * h1k2,
            (j2 + k3) * h2k2,
            (j1 - k1) * h1k3,
            (j2 - k2) * h2k3,
            -k2,
            -k3,
        ]);
        Ok([first, second])
    }

    pub fn syzygies(&self) -> Result<ThermoSyzygies, ThermoError> {
        Ok(ThermoSyzygies { nabla: self.nabla_syzygy()?, k: self.k_syzygies()? })
    }

    /// `[F, e − T e_T, e_p, v − T v_T, v + p v_p]`, each relative to its terms.
    pub fn ideal_gas_residuals(&self) -> [f64; 5] {
        let f = self.fields();
        let (t, p, e, v) = (f.t.value(), f.p.value(), f.e.value(), f.v.value());
        let (et, ep, vt, vp) = (f.et.value(), f.ep.value(), f.vt.value(), f.vp.value());
        [
            scaled_sum(&[ep, t * vt, p * vp]),
            scaled_sum(&[e, -t * et]),
            scaled_sum(&[ep]),
            scaled_sum(&[v, -t * vt]),
            scaled_sum(&[v, p * vp]),
        ]
    }
}

/// The constant-heat-capacity family
/// `e = f₁(p) T − f₂'(p) p²`, `v = (C − f₁(p)) T / p + f₂'(p) p + f₂(p)`.
pub fn constant_cp_family(c: f64, f1: &Expr, f2: &Expr) -> Result<GasChart, ThermoError> {
    for ex in [f1, f2] {
        if let Some(x) = ex.variables().into_iter().find(|x| x != "p") {
            return Err(ThermoError::BadVariable(x));
        }
    }
    let (t, p) = (Expr::var("T"), Expr::var("p"));
    let f2p = f2.derivative("p");
    let e = f1.clone() * t.clone() - f2p.clone() * p.clone().powi(2);
    let v = (Expr::c(c) - f1.clone()) * t / p.clone() + f2p * p + f2.clone();
    GasChart::new(e, v, Default::default())
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdealGasReport {
    pub ideal: bool,
    /// Largest of each of the five residuals over the sample points.
    pub max_residuals: [f64; 5],
    /// `(J₁, J₂)` at each sample point.
    pub j: Vec<(f64, f64)>,
}

pub const IDEAL_GAS_TOL: f64 = 1e-10;

/// Checks `F = 0`, `e = T e_T`, `e_p = 0`, `v = T v_T`, `v = −p v_p` at every point.
pub fn ideal_gas_test(g: &GasChart, points: &[(f64, f64)]) -> Result<IdealGasReport, ThermoError> {
    let mut max_residuals = [0.0; 5];
    let mut j = Vec::with_capacity(points.len());
    for &(t, p) in points {
        let jet = g.jet(t, p, 2)?;
        for (m, r) in max_residuals.iter_mut().zip(jet.ideal_gas_residuals()) {
            *m = f64::max(*m, r.abs());
        }
        let s = jet.subgroup_invariants()?;
        j.push((s.j1, s.j2));
    }
    let ideal = max_residuals.iter().all(|r| *r < IDEAL_GAS_TOL);
    Ok(IdealGasReport { ideal, max_residuals, j })
}

/// A random Lagrangian gas jet, bridged from a random admissible potential.
/// Returns the jet and its point `(T, p)`, with `T ∈ [0.5, 2]` and `|p| ≥ 0.1`.
pub fn random_gas(rng: &mut impl Rng, order: usize) -> (GasJet, f64, f64) {
    loop {
        let (fam, l0) = random_admissible_potential(2, rng);
        let Ok((t, p)) = lambda_to_tp(&l0) else { continue };
        if !(0.5..=2.0).contains(&t) || p.abs() < 0.1 {
            continue;
        }
        let Ok(c) = fam.chart_jet(&l0, order) else { continue };
        let Ok(g) = GasJet::from_chart(&c) else { continue };
        let f = g.fields();
        if f.d1().is_err() || f.d2().is_err() || g.tresse_matrix().is_err() {
            continue;
        }
        return (g, t, p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{scalar_invariants, second_order_invariant};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Vec<(f64, f64)> {
        (0..5).flat_map(|i| (0..5).map(move |j| (0.5 + 0.375 * i as f64, 0.5 + 0.375 * j as f64))).collect()
    }

    #[test]
    fn ideal_gas_invariants() {
        let g = GasChart::ideal(1.5, 1.0);
        for (t, p) in grid() {
            let inv = g.invariants(t, p).unwrap();
            assert!((inv.i2 - 2.5).abs() < 1e-12);
            assert!(inv.i31.abs() < 1e-12);
            assert!(inv.f.abs() < 1e-12);
            assert!(inv.sigma2_frame.is_none());
            assert!((inv.subgroup.j1 - 1.5).abs() < 1e-12 && (inv.subgroup.j2 - 1.0).abs() < 1e-12);
        }
        assert!(matches!(g.jet(1.0, 1.0, 4).unwrap().tresse_matrix(), Err(ThermoError::TresseDegenerate)));
    }

    #[test]
    fn random_gas_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let (g, _, _) = random_gas(&mut rng, 4);
            let f = g.fields();
            assert!(f.f().value().abs() < 1e-10);
            let inv = g.invariants().unwrap();
            // I₃₁ = ∇₁(I₂)
            let i31 = g.nabla1(&f.i2());
            assert!((i31 - inv.i31).abs() < 1e-9 * i31.abs().max(1.0));
            let [s11, s12, s22] = inv.sigma2_frame.unwrap();
            assert!((s11 - inv.i2).abs() < 1e-9 * s11.abs().max(1.0));
            assert!(s12.abs() < 1e-9 * s11.abs().max(1.0));
            assert!((s22 - inv.i2 / inv.i32).abs() < 1e-9 * s22.abs().max(1.0));
            let z = g.syzygies().unwrap();
            assert!(z.nabla.abs() < 1e-9, "{z:?}");
            assert!(z.k.iter().all(|r| r.abs() < 1e-8), "{z:?}");
        }
    }

    #[test]
    fn tresse_derivatives_normalize_j() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (g, _, _) = random_gas(&mut rng, 4);
        let s = g.subgroup_series().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g.tresse(i, &s[j]).unwrap() - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn heat_capacity_matches_frame_side() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let (g, _, _) = random_gas(&mut rng, 4);
            let c = g.to_chart().unwrap();
            let i2 = g.affine_invariants().unwrap()[0];
            let s = second_order_invariant(&c).unwrap();
            assert!((s - i2).abs() < 1e-9 * i2.abs().max(1.0));
            let t = scalar_invariants(&c, 3).unwrap();
            assert!((t.get("I21").unwrap() - i2).abs() < 1e-9 * i2.abs().max(1.0));
        }
    }

    #[test]
    fn constant_cp() {
        let (f1, f2) = (Expr::var("p"), Expr::var("p").powi(2));
        let g = constant_cp_family(2.0, &f1, &f2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let (t, p) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
            assert!(g.lagrangian_residual(t, p).unwrap().abs() < 1e-11);
            assert!((g.affine_invariants(t, p).unwrap()[0] - 2.0).abs() < 1e-11);
        }
        let ideal_like = constant_cp_family(2.5, &Expr::c(1.5), &Expr::c(0.0)).unwrap();
        assert!((ideal_like.affine_invariants(1.2, 0.8).unwrap()[0] - 2.5).abs() < 1e-12);
        let zero = constant_cp_family(0.0, &Expr::c(0.0), &Expr::c(0.0)).unwrap();
        let j = zero.jet(1.0, 1.0, 2).unwrap();
        assert_eq!(j.partials(0, 0), (0.0, 0.0));
        assert_eq!(j.lagrangian_residual(), 0.0);
    }

    #[test]
    fn ideal_gas_detection() {
        let pts = grid();
        assert!(ideal_gas_test(&GasChart::ideal(1.5, 1.0), &pts).unwrap().ideal);
        let r = ideal_gas_test(&GasChart::ideal(2.0, 0.7), &pts).unwrap();
        assert!(r.j.iter().all(|&(a, b)| (a - 2.0).abs() < 1e-12 && (b - 0.7).abs() < 1e-12));
        let (t, p) = (Expr::var("T"), Expr::var("p"));
        let vdw = GasChart::new(
            Expr::c(1.5) * t.clone() - p.clone() / t.clone(),
            t.clone() / p.clone(),
            Default::default(),
        )
        .unwrap();
        assert!(!ideal_gas_test(&vdw, &pts).unwrap().ideal);
        let cp = constant_cp_family(2.0, &Expr::var("p"), &Expr::c(0.0)).unwrap();
        assert!(!ideal_gas_test(&cp, &pts).unwrap().ideal);
    }
}

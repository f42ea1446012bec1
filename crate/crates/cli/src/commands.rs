//! The five subcommands, each producing a [`Report`].

use std::fmt::Display;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use jetmoments_core::affine::{dim_e, dim_jet_space, hilbert, orbit_codimension, poincare_coefficients, ORBIT_RANK_TOL};
use jetmoments_core::expfam::{central_moment_direct, info_gain, partition, potential_and_mean, sample_central_moment};
use jetmoments_core::frame::{
    commutator_probe, rel_residual, relation_residuals, scalar_invariants, second_order_invariant, sigma_tensors,
    sorted_tuples, syzygy_residuals_2d, CommutatorCandidate, FRAME_REGULARITY_TOL,
};
use jetmoments_core::thermo::{generator_flow, ideal_gas_test, tp_to_lambda, ThermoError, GENERATOR_NAMES};
use jetmoments_core::{AffineElement, ChartJet, FunctionJetPoint, GasChart, LagrangianFamily, Scalar, SymTensor};

use crate::model::{Kind, ModelFile};
use crate::report::{num, nums, Report};

/// Tolerances before `--tol-scale`.
pub mod tol {
    pub const LAGRANGIAN: f64 = 1e-10;
    pub const RELATION: f64 = 1e-10;
    pub const SYZYGY: f64 = 1e-8;
    pub const TRANSPORT: f64 = 1e-8;
    pub const MOMENTS: f64 = 1e-10;
    pub const THERMO: f64 = 1e-9;
    pub const FLOW: f64 = 1e-9;
    pub const COUNT: f64 = 0.5;
    pub const Z_SCORE: f64 = 5.0;
}

pub const DEFAULT_KMAX: usize = 4;
pub const MAX_KMAX: usize = 6;
pub const TRANSPORT_TRIALS: usize = 20;
const FLOW_TIME: f64 = 0.3;

#[derive(Clone, Debug, PartialEq)]
pub struct Options {
    pub point: Option<Vec<f64>>,
    pub order: Option<usize>,
    pub kmax: usize,
    pub seed: u64,
    pub samples: usize,
    pub tol_scale: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self { point: None, order: None, kmax: DEFAULT_KMAX, seed: 0, samples: 100_000, tol_scale: 1.0 }
    }
}

/// A usage or domain error; exit code 2.
#[derive(Clone, Debug, PartialEq)]
pub struct CommandError(pub String);

impl<E: Display> From<E> for CommandError {
    fn from(e: E) -> Self {
        CommandError(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CommandError>;

fn fail<T>(msg: impl Into<String>) -> Result<T> {
    Err(CommandError(msg.into()))
}

fn point_names(m: &ModelFile) -> Vec<String> {
    match m.kind() {
        Kind::Gas => vec!["T".into(), "p".into()],
        _ => (1..=m.dim()).map(|i| format!("l{i}")).collect(),
    }
}

fn eval_point(m: &ModelFile, opts: &Options) -> Result<Vec<f64>> {
    let n = m.dim();
    let pt = match &opts.point {
        Some(p) => p.clone(),
        None if m.kind() == Kind::Gas => vec![1.0, 1.0],
        None => vec![0.0; n],
    };
    if pt.len() != n {
        return fail(format!("--point needs {n} coordinates ({}), got {}", point_names(m).join(","), pt.len()));
    }
    if pt.iter().any(|x| !x.is_finite()) {
        return fail("--point coordinates must be finite");
    }
    Ok(pt)
}

fn check_kmax(opts: &Options) -> Result<()> {
    if !(2..=MAX_KMAX).contains(&opts.kmax) {
        return fail(format!("--kmax must be between 2 and {MAX_KMAX}"));
    }
    Ok(())
}

fn new_report(cmd: &str, m: &ModelFile, pt: &[f64], opts: &Options) -> Report {
    let mut r = Report::new(cmd, Some(m.kind().name()));
    r.point = point_names(m).into_iter().zip(pt.iter().copied()).collect();
    r.non_normative = opts.tol_scale != 1.0;
    r
}

/// Components `σ_k[i₁,…,i_k]`, indices 1-based and non-decreasing.
fn tensor_value(t: &SymTensor) -> Value {
    let m: Map<String, Value> = sorted_tuples(t.dim(), t.degree())
        .into_iter()
        .map(|ix| {
            let key = ix.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",");
            (key, num(*t.component(&ix)))
        })
        .collect();
    Value::Object(m)
}

fn matrix_value(m: &[Vec<f64>]) -> Value {
    Value::Array(m.iter().map(|r| nums(r)).collect())
}

/// The family behind a non-gas model, and the `λ` for a model point.
fn family(m: &ModelFile) -> Result<Box<dyn LagrangianFamily>> {
    match m.kind() {
        Kind::Ensemble => Ok(Box::new(m.ensemble().ok_or_else(|| CommandError("invalid ensemble".into()))?)),
        Kind::Potential => Ok(Box::new(m.potential().ok_or_else(|| CommandError("invalid potential".into()))?)),
        Kind::Gas => Ok(Box::new(gas(m)?)),
    }
}

fn gas(m: &ModelFile) -> Result<GasChart> {
    m.gas().ok_or_else(|| CommandError("invalid gas model".into()))
}

fn lambda_of(m: &ModelFile, pt: &[f64]) -> Result<Vec<f64>> {
    match m.kind() {
        Kind::Gas => Ok(tp_to_lambda(pt[0], pt[1])?.to_vec()),
        _ => Ok(pt.to_vec()),
    }
}

fn admissibility_warnings(r: &mut Report, m: &ModelFile) {
    if let Some(ens) = m.ensemble() {
        if !ens.affinely_spans() {
            r.warn("ensemble points do not affinely span the space; σ₂ is degenerate");
        }
    }
}

pub fn moments(m: &ModelFile, opts: &Options) -> Result<Report> {
    check_kmax(opts)?;
    let pt = eval_point(m, opts)?;
    let mut r = new_report("moments", m, &pt, opts);
    admissibility_warnings(&mut r, m);
    let lambda = lambda_of(m, &pt)?;
    if let Some(ens) = m.ensemble() {
        let z = partition(&ens, &lambda, 0).value();
        let (_, x) = potential_and_mean(&ens, &lambda, 1);
        r.value("Z", num(z));
        r.value("H", num(-z.ln()));
        r.value("x", nums(&x));
        r.value("info_gain", num(info_gain(&ens, &lambda)));
        for k in 2..=opts.kmax {
            r.value(format!("sigma{k}"), tensor_value(&central_moment_direct(&ens, &lambda, k)));
        }
        return Ok(r);
    }
    if m.kind() == Kind::Gas {
        r.value("lambda", nums(&lambda));
    }
    let c = family(m)?.chart_jet(&lambda, opts.order.unwrap_or(opts.kmax))?;
    if let Some(pc) = m.potential() {
        r.value("H", num(pc.potential_jet(&lambda, 0)?.value()));
    }
    r.value("x", nums(&c.point()));
    for (t, k) in sigma_tensors(&c, opts.kmax)?.iter().zip(2..) {
        r.value(format!("sigma{k}"), tensor_value(t));
    }
    Ok(r)
}

pub fn invariants(m: &ModelFile, opts: &Options) -> Result<Report> {
    check_kmax(opts)?;
    let pt = eval_point(m, opts)?;
    let mut r = new_report("invariants", m, &pt, opts);
    if m.kind() == Kind::Gas {
        gas_invariants(&mut r, &gas(m)?, pt[0], pt[1])?;
        return Ok(r);
    }
    admissibility_warnings(&mut r, m);
    let c = family(m)?.chart_jet(&pt, opts.order.unwrap_or(opts.kmax.max(3)))?;
    if !c.is_admissible() {
        return fail("σ₂ is not positive definite at this point");
    }
    let table = scalar_invariants(&c, opts.kmax)?;
    for (name, v) in table.iter() {
        r.value(name.clone(), num(*v));
    }
    let frame = jetmoments_core::frame::frame_at(&c)?;
    r.value("frame", matrix_value(frame.vectors()));
    r.value("frame_regularity", num(frame.regularity()));
    if frame.regularity() < 1e3 * FRAME_REGULARITY_TOL {
        r.warn("frame is nearly degenerate; invariants are ill-conditioned");
    }
    Ok(r)
}

fn grid_5x5() -> Vec<(f64, f64)> {
    (0..5).flat_map(|i| (0..5).map(move |j| (0.5 + 0.375 * i as f64, 0.5 + 0.375 * j as f64))).collect()
}

fn gas_invariants(r: &mut Report, g: &GasChart, t: f64, p: f64) -> Result<()> {
    let inv = g.invariants(t, p)?;
    r.value("F", num(inv.f));
    for (name, v) in [("I2", inv.i2), ("I31", inv.i31), ("I32", inv.i32), ("I33", inv.i33), ("I34", inv.i34)] {
        r.value(name, num(v));
    }
    let s = inv.subgroup;
    for (name, v) in [("J1", s.j1), ("J2", s.j2), ("K1", s.k1), ("K2", s.k2), ("K3", s.k3)] {
        r.value(name, num(v));
    }
    r.value("cv", s.cv.map_or(Value::Null, num));
    let s2 = g.sigma2(t, p)?;
    r.value("sigma2", matrix_value(&[s2[0].to_vec(), s2[1].to_vec()]));
    if let Some([a, b, c]) = inv.sigma2_frame {
        r.value("sigma2_frame", json!({"11": num(a), "12": num(b), "22": num(c)}));
    }
    if inv.f.abs() > tol::LAGRANGIAN {
        r.warn("F ≠ 0: the chart is not Lagrangian here");
    }
    if !inv.admissibility.i2_positive {
        r.warn("I₂ ≤ 0: heat capacity is not positive");
    }
    if !inv.admissibility.sigma2_positive_definite {
        r.warn("σ₂ is not positive definite");
    }
    let mut pts = grid_5x5();
    pts.push((t, p));
    match ideal_gas_test(g, &pts) {
        Ok(rep) => r.value("ideal_gas", rep.ideal),
        Err(e) => {
            r.value("ideal_gas", false);
            r.warn(format!("ideal-gas test could not be evaluated: {e}"));
        }
    }
    Ok(())
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| rel_residual(*x, *y)).fold(0.0, f64::max)
}

pub fn verify(m: &ModelFile, opts: &Options) -> Result<Report> {
    let pt = eval_point(m, opts)?;
    let mut r = new_report("verify", m, &pt, opts);
    if m.kind() == Kind::Gas {
        verify_gas(&mut r, &gas(m)?, pt[0], pt[1], opts)?;
    } else {
        verify_chart(&mut r, m, &pt, opts)?;
    }
    Ok(r)
}

fn verify_chart(r: &mut Report, m: &ModelFile, pt: &[f64], opts: &Options) -> Result<()> {
    let ts = opts.tol_scale;
    admissibility_warnings(r, m);
    let fam = family(m)?;
    let n = fam.dim();
    let c = fam.chart_jet(pt, opts.order.unwrap_or(5))?;
    if !c.is_admissible() {
        return fail("σ₂ is not positive definite at this point");
    }
    r.residual("lagrangian_defect", c.lagrangian_defect(), tol::LAGRANGIAN * ts);

    let rel = relation_residuals(&c)?;
    for (i, res) in &rel.frame {
        r.residual(format!("relations.frame.v{i}"), *res, tol::RELATION * ts);
    }
    for s in &rel.sigma3 {
        let name = format!("relations.sigma3.{}{}={}{}", s.lhs[0], s.lhs[1], s.rhs[0], s.rhs[1]);
        r.residual(name, s.residual, tol::RELATION * ts);
    }
    r.value("relations.count", rel.sigma3.len() as u64);
    r.value("relations.expected_count", rel.expected_count as u64);
    r.residual("relations.count", rel.sigma3.len().abs_diff(rel.expected_count) as f64, tol::COUNT);

    let table = scalar_invariants(&c, 4)?;
    if n == 2 {
        let g = |k: &str| *table.get(k).expect("n = 2 names");
        r.residual("on_shell.I22=I31", rel_residual(g("I22"), g("I31")), tol::RELATION * ts);
        r.residual("on_shell.I23=I32", rel_residual(g("I23"), g("I32")), tol::RELATION * ts);
        let z = syzygy_residuals_2d(fam.as_ref(), pt)?;
        for (i, s) in z.syzygies.iter().enumerate() {
            r.residual(format!("syzygy.{}", i + 1), *s, tol::SYZYGY * ts);
        }
        r.residual("syzygy.v1(I21)", z.i21[0], tol::SYZYGY * ts);
        r.residual("syzygy.v2(I21)", z.i21[1], tol::SYZYGY * ts);
        let probe = commutator_probe(fam.as_ref(), pt, CommutatorCandidate::CentralMoment)?;
        r.value("commutator", nums(&probe.computed));
        r.residual("commutator", probe.residual, tol::SYZYGY * ts);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let names: Vec<&String> = table.iter().map(|(k, _)| k).collect();
    let before: Vec<f64> = table.iter().map(|(_, v)| *v).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..TRANSPORT_TRIALS {
        let g = AffineElement::random(n, &mut rng);
        let moved = scalar_invariants(&c.transport(&g)?, 4)?;
        let after: Vec<f64> = names.iter().map(|k| *moved.get(k).expect("same names")).collect();
        worst = worst.max(max_rel(&before, &after));
    }
    r.residual("transport.max_rel", worst, tol::TRANSPORT * ts);

    if let Some(ens) = m.ensemble() {
        let sig = sigma_tensors(&c, 5)?;
        for (s, k) in sig.iter().zip(2..) {
            let direct = central_moment_direct(&ens, pt, k);
            let res = s.max_abs_diff(&direct) / direct.max_abs().max(1.0);
            r.residual(format!("moments.sigma{k}"), res, tol::MOMENTS * ts);
        }
    }
    Ok(())
}

fn verify_gas(r: &mut Report, g: &GasChart, t: f64, p: f64, opts: &Options) -> Result<()> {
    let ts = opts.tol_scale;
    let jet = g.jet(t, p, opts.order.unwrap_or(4).max(4))?;
    let inv = jet.invariants()?;
    r.value("I2", num(inv.i2));
    r.residual("F", jet.lagrangian_residual(), tol::LAGRANGIAN * ts);
    r.residual("I31=nabla1(I2)", rel_residual(jet.nabla1_i2(), inv.i31), tol::THERMO * ts);
    match inv.sigma2_frame {
        Some([a, b, c]) => {
            r.residual("sigma2_frame.11=I2", rel_residual(a, inv.i2), tol::THERMO * ts);
            r.residual("sigma2_frame.12=0", b.abs() / a.abs().max(1.0), tol::THERMO * ts);
            r.residual("sigma2_frame.22=I2/I32", rel_residual(c, inv.i2 / inv.i32), tol::THERMO * ts);
        }
        None => r.warn("∇₂ is undefined here; σ₂ frame identities skipped"),
    }
    let chart: std::result::Result<ChartJet, ThermoError> = jet.to_chart();
    match chart.map_err(CommandError::from).and_then(|c| Ok((second_order_invariant(&c)?, scalar_invariants(&c, 3)?))) {
        Ok((s, table)) => {
            r.residual("frame.second_order=I2", rel_residual(s, inv.i2), tol::THERMO * ts);
            r.residual("frame.I21=I2", rel_residual(*table.get("I21").expect("n = 2"), inv.i2), tol::THERMO * ts);
        }
        Err(e) => r.warn(format!("frame-side comparison skipped: {}", e.0)),
    }
    r.residual("syzygy.nabla", jet.nabla_syzygy()?, tol::SYZYGY * ts);
    match jet.k_syzygies() {
        Ok([a, b]) => {
            r.residual("syzygy.K1", a, tol::SYZYGY * ts);
            r.residual("syzygy.K2", b, tol::SYZYGY * ts);
        }
        Err(ThermoError::TresseDegenerate) => {
            r.warn("J₁, J₂ are functionally dependent (Tresse derivatives undefined); K-syzygies skipped")
        }
        Err(e) => return Err(e.into()),
    }
    let before = jet.affine_invariants()?;
    for (k, name) in GENERATOR_NAMES.iter().enumerate() {
        match jet.transport(&generator_flow(k, FLOW_TIME)).and_then(|j| j.affine_invariants()) {
            Ok(after) => r.residual(format!("generators.{name}"), max_rel(&before, &after), tol::FLOW * ts),
            Err(e) => r.warn(format!("flow of {name} could not be evaluated: {e}")),
        }
    }
    Ok(())
}

pub fn sample(m: &ModelFile, opts: &Options) -> Result<Report> {
    check_kmax(opts)?;
    let Some(ens) = m.ensemble() else {
        return fail(format!("`sample` needs an ensemble model, got {}", m.kind().name()));
    };
    let pt = eval_point(m, opts)?;
    let mut r = new_report("sample", m, &pt, opts);
    r.value("samples", opts.samples as u64);
    r.value("seed", opts.seed);
    for k in 2..=opts.kmax {
        let est = sample_central_moment(&ens, &pt, k, opts.samples, opts.seed)?;
        let exact = central_moment_direct(&ens, &pt, k);
        let mut z: f64 = 0.0;
        for (ix, e) in exact.entries() {
            let se = *est.std_error.get(ix);
            let d = (est.estimate.get(ix) - e).abs();
            z = z.max(if se > 0.0 { d / se } else if d < 1e-12 { 0.0 } else { f64::INFINITY });
        }
        r.value(format!("sigma{k}.estimate"), tensor_value(&est.estimate));
        r.value(format!("sigma{k}.std_error"), tensor_value(&est.std_error));
        r.value(format!("sigma{k}.exact"), tensor_value(&exact));
        r.residual(format!("sigma{k}.z_score"), z, tol::Z_SCORE * opts.tol_scale);
    }
    Ok(r)
}

pub const MAX_HILBERT_N: usize = 16;
pub const MAX_HILBERT_K: usize = 32;

/// Counting tables up to order `k`; numeric orbit codimensions are added
/// for `n ≤ 3`, `k ≤ 4`.
pub fn hilbert_table(n: usize, k: usize, opts: &Options) -> Result<Report> {
    if !(1..=MAX_HILBERT_N).contains(&n) || k > MAX_HILBERT_K {
        return fail(format!("need 1 ≤ n ≤ {MAX_HILBERT_N} and k ≤ {MAX_HILBERT_K}"));
    }
    let mut r = Report::new("hilbert", None);
    r.non_normative = opts.tol_scale != 1.0;
    r.value("n", n as u64);
    r.value("k", k as u64);
    let h: Vec<u64> = (0..=k).map(|j| hilbert(n, j) as u64).collect();
    let s: Vec<u64> = h.iter().scan(0, |acc, x| {
        *acc += x;
        Some(*acc)
    }).collect();
    r.value("H", h);
    r.value("s", s.clone());
    r.value("dim_jet", (0..=k).map(|j| dim_jet_space(n, j) as u64).collect::<Vec<_>>());
    r.value("dim_E", (0..=k).map(|j| dim_e(n, j) as u64).collect::<Vec<_>>());
    r.value("poincare", poincare_coefficients(n, k).into_iter().map(|c| c as i64).collect::<Vec<_>>());
    if n <= 3 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut numeric = Vec::new();
        for j in 0..=k.min(4) {
            let jp = FunctionJetPoint::random(n, j, &mut rng);
            let c = orbit_codimension(&jp, ORBIT_RANK_TOL, opts.seed)?;
            r.residual(format!("s_numeric.k{j}"), (c as f64 - s[j] as f64).abs(), tol::COUNT);
            numeric.push(c as u64);
        }
        r.value("s_numeric", numeric);
    }
    Ok(r)
}

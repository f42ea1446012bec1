//! Orbit dimensions of the affine group on jets, and the Hilbert function
//! of the invariant algebra.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{prolong, AffineError, FunctionJetPoint, PolyVectorField};
use crate::jets::binomial_u128;
use crate::linalg::numerical_rank;

/// Relative singular-value threshold for orbit ranks.
pub const ORBIT_RANK_TOL: f64 = 1e-8;

const MAX_RESAMPLES: usize = 5;

/// `dim J^k(V) = n + C(n + k, k)`.
pub fn dim_jet_space(n: usize, k: usize) -> u128 {
    n as u128 + binomial_u128((n + k) as u64, k as u64)
}

/// `dim ℰ_k = n + C(n + k + 1, n) − 1`.
pub fn dim_e(n: usize, k: usize) -> u128 {
    n as u128 + binomial_u128((n + k + 1) as u64, n as u64) - 1
}

/// Number of independent invariants of pure order `k`.
pub fn hilbert(n: usize, k: usize) -> u128 {
    assert!(n >= 1, "hilbert: n must be positive");
    let n = n as u128;
    match k {
        0 => 1,
        1 => 0,
        2 => 1,
        3 => (n * n * n + 11 * n - 6) / 6,
        _ => binomial_u128((n as u64) + k as u64 - 1, k as u64),
    }
}

/// Numerator `N(z)` of the Poincaré series `N(z) / (1 − z)^n`, where
/// `N(z) = 1 − (z/2)(1 − z)^n ((n−1)(n−2) z² + (n+2)(n−1) z + 2n)`.
pub fn poincare_numerator(n: usize) -> Vec<i128> {
    let m = n as i128;
    // q(z)/2; every coefficient of q is even
    let half_q = [m, (m + 2) * (m - 1) / 2, (m - 1) * (m - 2) / 2];
    let one_minus_z_n: Vec<i128> = (0..=n)
        .map(|i| {
            let c = binomial_u128(n as u64, i as u64) as i128;
            if i % 2 == 0 { c } else { -c }
        })
        .collect();
    let mut out = vec![0i128; n + 4];
    out[0] = 1;
    for (i, q) in half_q.iter().enumerate() {
        for (j, b) in one_minus_z_n.iter().enumerate() {
            out[1 + i + j] -= q * b;
        }
    }
    while out.len() > 1 && *out.last().unwrap() == 0 {
        out.pop();
    }
    out
}

/// Power-series coefficients `H_0, …, H_{up_to}` of the Poincaré series.
pub fn poincare_coefficients(n: usize, up_to: usize) -> Vec<i128> {
    let num = poincare_numerator(n);
    let den: Vec<i128> = (0..=n)
        .map(|i| {
            let c = binomial_u128(n as u64, i as u64) as i128;
            if i % 2 == 0 { c } else { -c }
        })
        .collect();
    let mut c = Vec::with_capacity(up_to + 1);
    for k in 0..=up_to {
        let mut v = num.get(k).copied().unwrap_or(0);
        for i in 1..=k.min(n) {
            v -= den[i] * c[k - i];
        }
        c.push(v);
    }
    c
}

/// Basis of the affine algebra: `x^j ∂_i` then `∂_i`.
pub fn affine_generators(n: usize) -> Vec<PolyVectorField> {
    let mut out = Vec::with_capacity(n * n + n);
    for i in 0..n {
        for j in 0..n {
            let mut a = vec![vec![0.0; n]; n];
            a[i][j] = 1.0;
            out.push(PolyVectorField::affine(&a, &vec![0.0; n]));
        }
    }
    for i in 0..n {
        let mut b = vec![0.0; n];
        b[i] = 1.0;
        out.push(PolyVectorField::affine(&vec![vec![0.0; n]; n], &b));
    }
    out
}

/// Rank of the prolonged affine generators at a jet point.
pub fn orbit_rank_at(jp: &FunctionJetPoint, rank_tol: f64) -> Result<usize, AffineError> {
    let k = jp.order();
    let rows = affine_generators(jp.dim())
        .iter()
        .map(|g| prolong(g, k).at(jp).map(|v| v.coordinates()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(numerical_rank(&rows, rank_tol))
}

/// `dim J^k − rank` at this particular point.
pub fn orbit_codimension_at(jp: &FunctionJetPoint, rank_tol: f64) -> Result<usize, AffineError> {
    Ok(jp.space_dim() - orbit_rank_at(jp, rank_tol)?)
}

/// Codimension of a generic orbit through jets of the order of `jp`.
///
/// The rank at `jp` is accepted when it reaches the a-priori bound
/// `min(n² + n, dim J^k)`. Otherwise random points are drawn from `seed`
/// until the largest rank seen so far has been observed twice.
pub fn orbit_codimension(jp: &FunctionJetPoint, rank_tol: f64, seed: u64) -> Result<usize, AffineError> {
    let n = jp.dim();
    let space = jp.space_dim();
    let bound = (n * n + n).min(space);
    let mut ranks = vec![orbit_rank_at(jp, rank_tol)?];
    if ranks[0] == bound {
        return Ok(space - bound);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=MAX_RESAMPLES {
        let sample = FunctionJetPoint::random(n, jp.order(), &mut rng);
        ranks.push(orbit_rank_at(&sample, rank_tol)?);
        let best = *ranks.iter().max().unwrap();
        if best == bound || ranks.iter().filter(|&&r| r == best).count() >= 2 {
            return Ok(space - best);
        }
        if attempt == MAX_RESAMPLES {
            break;
        }
    }
    Err(AffineError::DegenerateSamplePoint { attempts: MAX_RESAMPLES })
}

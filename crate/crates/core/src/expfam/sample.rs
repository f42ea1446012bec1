//! Monte Carlo estimates of central moments under the tilted measure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ExpfamError, FiniteEnsemble};
use crate::tensor::SymTensor;

/// Draws are split over this many independent ChaCha streams, so results
/// depend only on `(seed, N)` and not on the thread count.
const PARTITIONS: u64 = 16;

/// Plug-in estimate of `σ_k` together with per-component standard errors.
#[derive(Clone, Debug)]
pub struct SampleEstimate {
    pub estimate: SymTensor,
    pub std_error: SymTensor,
    pub samples: usize,
}

fn draw_counts(cdf: &[f64], draws: usize, seed: u64, stream: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut counts = vec![0u64; cdf.len()];
    for _ in 0..draws {
        let u: f64 = rng.random();
        let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        counts[i] += 1;
    }
    counts
}

/// `σ_k` estimated from `N` i.i.d. draws of `ρ·μ₀` by inverse-CDF sampling.
pub fn sample_central_moment(
    ens: &FiniteEnsemble,
    lambda: &[f64],
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<SampleEstimate, ExpfamError> {
    if samples < 2 {
        return Err(ExpfamError::TooFewSamples { needed: 2, found: samples });
    }
    let q = ens.tilted_weights(lambda);
    let cdf: Vec<f64> = q
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let per = samples as u64 / PARTITIONS;
    let extra = samples as u64 % PARTITIONS;
    let counts = (0..PARTITIONS)
        .into_par_iter()
        .map(|p| draw_counts(&cdf, (per + u64::from(p < extra)) as usize, seed, p))
        .reduce(|| vec![0u64; cdf.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());

    let total = samples as f64;
    let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let n = ens.dim();
    let points = ens.points();
    let mean: Vec<f64> = (0..n).map(|i| points.iter().zip(&freq).map(|(p, f)| f * p[i]).sum()).collect();
    let centered: Vec<Vec<f64>> = points.iter().map(|p| p.iter().zip(&mean).map(|(a, b)| a - b).collect()).collect();
    let estimate =
        SymTensor::from_fn(n, k, |j| centered.iter().zip(&freq).map(|(c, f)| f * j.monomial(c)).sum());
    let std_error = SymTensor::from_fn(n, k, |j| {
        let s: f64 = *estimate.get(j);
        let second: f64 = centered.iter().zip(&freq).map(|(c, f)| f * j.monomial(c).powi(2)).sum();
        ((second - s * s).max(0.0) / total).sqrt()
    });
    Ok(SampleEstimate { estimate, std_error, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let b = FiniteEnsemble::bernoulli();
        let a = sample_central_moment(&b, &[0.3], 2, 10_000, 5).unwrap();
        let c = sample_central_moment(&b, &[0.3], 2, 10_000, 5).unwrap();
        assert_eq!(a.estimate.component(&[0, 0]), c.estimate.component(&[0, 0]));
        assert!(sample_central_moment(&b, &[0.3], 2, 1, 5).is_err());
    }

    #[test]
    fn first_central_moment_vanishes() {
        let b = FiniteEnsemble::bernoulli();
        let s = sample_central_moment(&b, &[0.7], 1, 1000, 1).unwrap();
        assert!(s.estimate.component(&[0]).abs() < 1e-12);
    }
}

//! Monte Carlo estimators from sampled walks.
//!
//! Sample `i` always uses stream `i` of the seeded ChaCha generator, and
//! per-chunk tallies are merged in chunk order, so results are identical for
//! any number of worker threads.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagram::VpdElement;
use crate::error::{Error, Result};
use crate::lattice::{LatticeMap, LevyMeasure};
use crate::levy::{JumpMeasure, JumpSampler};
use crate::spectral::Estimate;
use crate::transport::rho_norm;

const CHUNK: usize = 8192;

/// An estimate compared with a reference value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub quantity: String,
    pub t: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub reference: f64,
    pub z_score: f64,
}

impl EstimatorResult {
    pub fn new(quantity: &str, t: f64, est: Estimate, n_samples: usize, reference: f64) -> Self {
        let diff = est.value - reference;
        let z_score = if est.error > 0.0 {
            diff / est.error
        } else if diff.abs() < 1e-12 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
        Self {
            quantity: quantity.into(),
            t,
            estimate: est.value,
            std_error: est.error,
            n_samples,
            reference,
            z_score,
        }
    }
}

fn check(t: f64, n: usize) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be nonnegative, got {t}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    Ok(())
}

/// Runs `visit(index, endpoint)` over all samples in fixed-size parallel
/// chunks and merges the per-chunk accumulators in chunk order.
fn fold_endpoints<A, F, M>(levy: &LevyMeasure, t: f64, n: usize, seed: u64, init: A, visit: F, merge: M) -> A
where
    A: Clone + Send + Sync,
    F: Fn(&mut A, usize, &[i32]) + Sync,
    M: Fn(&mut A, A),
{
    let sampler = JumpSampler::new(levy);
    let rank = levy.rank();
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init.clone();
            let mut end = vec![0i32; rank];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let mut rng = JumpSampler::stream(seed, i as u64);
                sampler.endpoint_into(t, &mut rng, &mut end);
                visit(&mut acc, i, &end);
            }
            acc
        })
        .collect();
    let mut total = init;
    for p in parts {
        merge(&mut total, p);
    }
    total
}

fn bernoulli(hits: u64, n: usize) -> Estimate {
    let p = hits as f64 / n as f64;
    Estimate {
        value: p,
        error: (p * (1.0 - p) / n as f64).sqrt(),
    }
}

/// Fraction of walks ending at the origin.
pub fn estimate_return(levy: &LevyMeasure, t: f64, n: usize, seed: u64) -> Result<Estimate> {
    check(t, n)?;
    let hits = fold_endpoints(
        levy,
        t,
        n,
        seed,
        0u64,
        |acc, _, end| {
            if end.iter().all(|&c| c == 0) {
                *acc += 1;
            }
        },
        |a, b| *a += b,
    );
    Ok(bernoulli(hits, n))
}

/// Fraction of independent pairs (samples `2i`, `2i+1`) with equal endpoints.
pub fn estimate_collision(levy: &LevyMeasure, t: f64, n: usize, seed: u64) -> Result<Estimate> {
    check(t, n)?;
    if n < 2 || n % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "collision needs an even sample count, got {n}"
        )));
    }
    // CHUNK is even, so both members of a pair land in the same chunk.
    let (hits, _) = fold_endpoints(
        levy,
        t,
        n,
        seed,
        (0u64, Vec::<i32>::new()),
        |acc, i, end| {
            if i % 2 == 0 {
                acc.1.clear();
                acc.1.extend_from_slice(end);
            } else if acc.1.as_slice() == end {
                acc.0 += 1;
            }
        },
        |a, b| a.0 += b.0,
    );
    Ok(bernoulli(hits, n / 2))
}

/// Empirical tails of `𝓜(X_t)` and `ρ(X_t, 0)` beyond `radius`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailEstimates {
    pub mass: Estimate,
    pub rho: Estimate,
}

/// `P(𝓜(X_t) > R)` and `P(ρ(X_t, 0) > R)`. Since `ρ ≤ 𝓜`, transport is only
/// solved for endpoints whose mass exceeds `R`.
pub fn tail_estimates(nu: &JumpMeasure, t: f64, radius: f64, n: usize, seed: u64) -> Result<TailEstimates> {
    check(t, n)?;
    let space = nu.space();
    let (mass_hits, rho_hits) = fold_endpoints(
        &nu.levy_measure(),
        t,
        n,
        seed,
        (0u64, 0u64),
        |acc, _, end| {
            let mass: f64 = end
                .iter()
                .enumerate()
                .map(|(i, &c)| c.unsigned_abs() as f64 * space.to_base(i))
                .sum();
            if mass > radius {
                acc.0 += 1;
                if rho_norm(&VpdElement::from_lattice(end), space) > radius {
                    acc.1 += 1;
                }
            }
        },
        |a, b| {
            a.0 += b.0;
            a.1 += b.1;
        },
    );
    Ok(TailEstimates {
        mass: bernoulli(mass_hits, n),
        rho: bernoulli(rho_hits, n),
    })
}

/// `P(𝓜(X_t) > R)`.
pub fn estimate_mass_tail(nu: &JumpMeasure, t: f64, radius: f64, n: usize, seed: u64) -> Result<Estimate> {
    Ok(tail_estimates(nu, t, radius, n, seed)?.mass)
}

/// Endpoint counts, ordered by lattice point.
pub fn endpoint_histogram(levy: &LevyMeasure, t: f64, n: usize, seed: u64) -> Result<BTreeMap<Vec<i32>, u64>> {
    check(t, n)?;
    Ok(fold_endpoints(
        levy,
        t,
        n,
        seed,
        BTreeMap::new(),
        |acc, _, end| *acc.entry(end.to_vec()).or_insert(0) += 1,
        |a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
        },
    ))
}

/// Total-variation distance between an empirical histogram and a kernel.
pub fn total_variation(hist: &BTreeMap<Vec<i32>, u64>, kernel: &LatticeMap) -> f64 {
    let n: u64 = hist.values().sum();
    let mut acc = 0.0;
    for (h, &c) in hist {
        acc += (c as f64 / n as f64 - kernel.get(h).copied().unwrap_or(0.0)).abs();
    }
    for (h, &p) in kernel {
        if !hist.contains_key(h) {
            acc += p;
        }
    }
    acc / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Atom;

    fn rate_one() -> LevyMeasure {
        LevyMeasure::new(
            2,
            vec![
                Atom {
                    increment: vec![(0, 1), (1, -1)],
                    rate: 1.0,
                },
                Atom {
                    increment: vec![(0, -1), (1, 1)],
                    rate: 1.0,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn trivial_cases() {
        let empty = LevyMeasure::empty(2);
        let r = estimate_return(&empty, 5.0, 10_000, 1).unwrap();
        assert_eq!((r.value, r.error), (1.0, 0.0));
        let c = estimate_collision(&empty, 5.0, 20_000, 1).unwrap();
        assert_eq!(c.value, 1.0);
        let r = estimate_return(&rate_one(), 0.0, 10_000, 1).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(estimate_collision(&rate_one(), 1.0, 10_001, 1).is_err());
    }

    #[test]
    fn z_score_edge_cases() {
        let r = EstimatorResult::new("return", 0.0, Estimate::exact(1.0), 10, 1.0);
        assert_eq!(r.z_score, 0.0);
        let r = EstimatorResult::new("return", 0.0, Estimate { value: 0.5, error: 0.1 }, 10, 0.3);
        assert!((r.z_score - 2.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_counts_all_samples() {
        let h = endpoint_histogram(&rate_one(), 0.5, 5000, 9).unwrap();
        assert_eq!(h.values().sum::<u64>(), 5000);
        assert_eq!(h, endpoint_histogram(&rate_one(), 0.5, 5000, 9).unwrap());
    }
}

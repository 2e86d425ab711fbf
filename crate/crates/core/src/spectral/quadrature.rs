//! Integration over the dual torus `[0, 2π)^rank` against normalized Haar
//! measure.
//!
//! The grid rule is the periodic trapezoid rule, which converges
//! geometrically for the smooth periodic integrands used here. Each pass
//! also evaluates the rule on the half-resolution subgrid (nodes whose
//! indices are all even), so a pass yields its own convergence estimate.
//! Monte Carlo draws one independent ChaCha stream per sample index.
//!
//! All reductions run over fixed-size chunks whose partial sums are combined
//! in chunk order, so results do not depend on the number of worker threads.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest rank accepted by grid quadrature.
pub const GRID_MAX_RANK: usize = 4;
/// Agreement required between successive grid resolutions.
pub const GRID_TOL: f64 = 1e-10;
/// Cap on the number of nodes of a single grid pass.
pub const GRID_NODE_CAP: usize = 1 << 25;
pub const MC_MIN_SAMPLES: usize = 10_000;

const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QuadratureSpec {
    /// Tensor trapezoid grid starting at `nodes` points per dimension.
    Grid {
        nodes: usize,
    },
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::Grid { nodes: 64 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            QuadratureSpec::Grid { nodes } if nodes < 8 || nodes % 2 != 0 => Err(Error::InvalidQuadrature(format!(
                "grid needs an even node count ≥ 8, got {nodes}"
            ))),
            QuadratureSpec::MonteCarlo { samples, .. } if samples < MC_MIN_SAMPLES => Err(Error::InvalidQuadrature(
                format!("monte carlo needs at least {MC_MIN_SAMPLES} samples, got {samples}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, QuadratureSpec::Grid { .. })
    }

    /// Fails when grid quadrature is requested above [`GRID_MAX_RANK`].
    pub fn check_rank(&self, rank: usize) -> Result<()> {
        if self.is_grid() && rank > GRID_MAX_RANK {
            return Err(Error::CostGuard {
                rank,
                max: GRID_MAX_RANK,
            });
        }
        Ok(())
    }
}

impl FromStr for QuadratureSpec {
    type Err = Error;

    /// Parses `grid:N` or `mc:SAMPLES:SEED`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| {
            p.parse::<u64>()
                .map_err(|_| Error::InvalidQuadrature(format!("bad number {p:?} in {s:?}")))
        };
        let spec = match parts.as_slice() {
            ["grid", n] => QuadratureSpec::Grid {
                nodes: num(n)? as usize,
            },
            ["mc", n, seed] => QuadratureSpec::MonteCarlo {
                samples: num(n)? as usize,
                seed: num(seed)?,
            },
            _ => {
                return Err(Error::InvalidQuadrature(format!(
                    "expected grid:N or mc:SAMPLES:SEED, got {s:?}"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for QuadratureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadratureSpec::Grid { nodes } => write!(f, "grid:{nodes}"),
            QuadratureSpec::MonteCarlo { samples, seed } => write!(f, "mc:{samples}:{seed}"),
        }
    }
}

/// A quadrature node: angles with their cosines and sines.
pub struct Node<'a> {
    pub theta: &'a [f64],
    pub cos: &'a [f64],
    pub sin: &'a [f64],
}

/// Result of a vector-valued integration.
#[derive(Clone, Debug, PartialEq)]
pub struct Integral {
    pub values: Vec<f64>,
    /// Grid: `|fine - coarse|` per component. Monte Carlo: standard errors.
    pub errors: Vec<f64>,
    /// Grid nodes per dimension of the final pass, or the sample count.
    pub resolution: usize,
    /// Grid: whether the agreement target was met. Always true for Monte Carlo.
    pub converged: bool,
    pub spec: QuadratureSpec,
}

/// Integrates `f: θ ↦ R^dim` over the torus.
pub fn integrate<F>(rank: usize, dim: usize, spec: QuadratureSpec, f: F) -> Result<Integral>
where
    F: Fn(&Node, &mut [f64]) + Sync,
{
    spec.validate()?;
    spec.check_rank(rank)?;
    if rank == 0 {
        let mut out = vec![0.0; dim];
        f(
            &Node {
                theta: &[],
                cos: &[],
                sin: &[],
            },
            &mut out,
        );
        return Ok(Integral {
            values: out,
            errors: vec![0.0; dim],
            resolution: 1,
            converged: true,
            spec,
        });
    }
    match spec {
        QuadratureSpec::Grid { nodes } => integrate_grid(rank, dim, nodes, spec, &f),
        QuadratureSpec::MonteCarlo { samples, seed } => integrate_mc(rank, dim, samples, seed, spec, &f),
    }
}

fn integrate_grid<F>(rank: usize, dim: usize, start: usize, spec: QuadratureSpec, f: &F) -> Result<Integral>
where
    F: Fn(&Node, &mut [f64]) + Sync,
{
    let mut n = start;
    loop {
        let (fine, coarse) = grid_pass(rank, dim, n, f);
        let errors: Vec<f64> = fine.iter().zip(&coarse).map(|(a, b)| (a - b).abs()).collect();
        let converged = fine.iter().zip(&errors).all(|(v, e)| *e <= GRID_TOL * v.abs().max(1.0));
        let next_total = (2 * n).checked_pow(rank as u32);
        if converged || next_total.map_or(true, |t| t > GRID_NODE_CAP) {
            return Ok(Integral {
                values: fine,
                errors,
                resolution: n,
                converged,
                spec,
            });
        }
        n *= 2;
    }
}

/// One trapezoid pass with `n` nodes per dimension; returns the fine and the
/// half-resolution estimates.
fn grid_pass<F>(rank: usize, dim: usize, n: usize, f: &F) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(&Node, &mut [f64]) + Sync,
{
    let total = n.pow(rank as u32);
    let angles: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
    let cos: Vec<f64> = angles.iter().map(|a| a.cos()).collect();
    let sin: Vec<f64> = angles.iter().map(|a| a.sin()).collect();
    let chunks = total.div_ceil(CHUNK);
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut fine = vec![0.0; dim];
            let mut coarse = vec![0.0; dim];
            let mut out = vec![0.0; dim];
            let mut th = vec![0.0; rank];
            let mut co = vec![0.0; rank];
            let mut si = vec![0.0; rank];
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(total);
            for idx in lo..hi {
                let mut r = idx;
                let mut even = true;
                for k in 0..rank {
                    let d = r % n;
                    r /= n;
                    even &= d % 2 == 0;
                    th[k] = angles[d];
                    co[k] = cos[d];
                    si[k] = sin[d];
                }
                out.iter_mut().for_each(|v| *v = 0.0);
                f(
                    &Node {
                        theta: &th,
                        cos: &co,
                        sin: &si,
                    },
                    &mut out,
                );
                for (acc, v) in fine.iter_mut().zip(&out) {
                    *acc += v;
                }
                if even {
                    for (acc, v) in coarse.iter_mut().zip(&out) {
                        *acc += v;
                    }
                }
            }
            (fine, coarse)
        })
        .collect();
    let mut fine = vec![0.0; dim];
    let mut coarse = vec![0.0; dim];
    for (pf, pc) in partial {
        for k in 0..dim {
            fine[k] += pf[k];
            coarse[k] += pc[k];
        }
    }
    let wf = 1.0 / total as f64;
    let wc = 1.0 / (n / 2).pow(rank as u32) as f64;
    (
        fine.into_iter().map(|v| v * wf).collect(),
        coarse.into_iter().map(|v| v * wc).collect(),
    )
}

fn integrate_mc<F>(rank: usize, dim: usize, samples: usize, seed: u64, spec: QuadratureSpec, f: &F) -> Result<Integral>
where
    F: Fn(&Node, &mut [f64]) + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sum = vec![0.0; dim];
            let mut sq = vec![0.0; dim];
            let mut out = vec![0.0; dim];
            let mut th = vec![0.0; rank];
            let mut co = vec![0.0; rank];
            let mut si = vec![0.0; rank];
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(samples);
            for idx in lo..hi {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(idx as u64);
                for k in 0..rank {
                    th[k] = rng.random::<f64>() * 2.0 * PI;
                    co[k] = th[k].cos();
                    si[k] = th[k].sin();
                }
                out.iter_mut().for_each(|v| *v = 0.0);
                f(
                    &Node {
                        theta: &th,
                        cos: &co,
                        sin: &si,
                    },
                    &mut out,
                );
                for k in 0..dim {
                    sum[k] += out[k];
                    sq[k] += out[k] * out[k];
                }
            }
            (sum, sq)
        })
        .collect();
    let mut sum = vec![0.0; dim];
    let mut sq = vec![0.0; dim];
    for (ps, pq) in partial {
        for k in 0..dim {
            sum[k] += ps[k];
            sq[k] += pq[k];
        }
    }
    let n = samples as f64;
    let values: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let errors = values
        .iter()
        .zip(&sq)
        .map(|(m, s)| {
            let var = ((s / n - m * m) * n / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        })
        .collect();
    Ok(Integral {
        values,
        errors,
        resolution: samples,
        converged: true,
        spec,
    })
}

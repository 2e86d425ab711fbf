//! Finitely supported measures on `Z^rank` and sparse lattice convolution.
//!
//! A [`LevyMeasure`] is a symmetric finite measure on nonzero lattice
//! increments; both the pair-jump measure of a ground space and the
//! Lévy-Khintchine measure of a truncated symbol (pair jumps plus boundary
//! unit jumps) are represented this way.

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

/// Sparse real-valued map on lattice points, keyed by dense coordinates.
pub type LatticeMap = FxHashMap<Vec<i32>, f64>;

/// A lattice increment stored as sparse `(coordinate, coefficient)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub increment: Vec<(usize, i32)>,
    pub rate: f64,
}

impl Atom {
    pub fn dense(&self, rank: usize) -> Vec<i32> {
        let mut out = vec![0; rank];
        for &(i, c) in &self.increment {
            out[i] += c;
        }
        out
    }

    /// `<κ, θ>`.
    pub fn pairing(&self, theta: &[f64]) -> f64 {
        self.increment.iter().map(|&(i, c)| c as f64 * theta[i]).sum()
    }
}

/// A symmetric finite measure on nonzero increments of `Z^rank`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevyMeasure {
    rank: usize,
    atoms: Vec<Atom>,
    total_rate: f64,
}

impl LevyMeasure {
    /// Validates rates (finite, nonnegative), coordinates, and exact symmetry
    /// `rate(κ) = rate(-κ)` after merging repeated increments. Zero-rate atoms
    /// are dropped.
    pub fn new(rank: usize, atoms: Vec<Atom>) -> Result<Self> {
        let mut merged: FxHashMap<Vec<i32>, f64> = FxHashMap::default();
        let mut order: Vec<Vec<i32>> = Vec::new();
        for a in &atoms {
            if !a.rate.is_finite() || a.rate < 0.0 {
                return Err(Error::NonFiniteRate(a.rate));
            }
            if let Some(&(i, _)) = a.increment.iter().find(|(i, _)| *i >= rank) {
                return Err(Error::UnknownGenerator { index: i, rank });
            }
            let key = a.dense(rank);
            if key.iter().all(|&c| c == 0) {
                return Err(Error::InvalidArgument("zero increment in jump measure".into()));
            }
            let slot = merged.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                0.0
            });
            *slot += a.rate;
        }
        for (key, &rate) in &merged {
            let neg: Vec<i32> = key.iter().map(|c| -c).collect();
            if merged.get(&neg).copied() != Some(rate) {
                return Err(Error::AsymmetricMeasure(format!("increment {key:?}")));
            }
        }
        let atoms: Vec<Atom> = order
            .into_iter()
            .filter_map(|key| {
                let rate = merged[&key];
                (rate > 0.0).then(|| Atom {
                    increment: key
                        .iter()
                        .enumerate()
                        .filter(|(_, &c)| c != 0)
                        .map(|(i, &c)| (i, c))
                        .collect(),
                    rate,
                })
            })
            .collect();
        let total_rate = atoms.iter().map(|a| a.rate).sum();
        Ok(Self {
            rank,
            atoms,
            total_rate,
        })
    }

    pub fn empty(rank: usize) -> Self {
        Self {
            rank,
            atoms: Vec::new(),
            total_rate: 0.0,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    /// Lévy-Khintchine exponent `Σ rate (1 - cos <κ, θ>)`.
    pub fn exponent(&self, theta: &[f64]) -> f64 {
        self.atoms.iter().map(|a| a.rate * (1.0 - a.pairing(theta).cos())).sum()
    }

    /// The jump distribution `ν / q` as a lattice map (empty when `q = 0`).
    pub fn jump_distribution(&self) -> LatticeMap {
        let mut out = LatticeMap::default();
        if self.total_rate > 0.0 {
            for a in &self.atoms {
                *out.entry(a.dense(self.rank)).or_insert(0.0) += a.rate / self.total_rate;
            }
        }
        out
    }
}

/// The point mass at the origin.
pub fn delta0(rank: usize) -> LatticeMap {
    let mut m = LatticeMap::default();
    m.insert(vec![0; rank], 1.0);
    m
}

/// Lattice convolution `(a * b)(h) = Σ a(x) b(h - x)`.
pub fn convolve(a: &LatticeMap, b: &LatticeMap) -> LatticeMap {
    let mut out = LatticeMap::default();
    out.reserve(a.len().saturating_mul(b.len()).min(1 << 20));
    let mut key = Vec::new();
    for (x, &va) in a {
        for (y, &vb) in b {
            key.clear();
            key.extend(x.iter().zip(y).map(|(p, q)| p + q));
            match out.get_mut(key.as_slice()) {
                Some(v) => *v += va * vb,
                None => {
                    out.insert(key.clone(), va * vb);
                }
            }
        }
    }
    out
}

pub fn negate(h: &[i32]) -> Vec<i32> {
    h.iter().map(|c| -c).collect()
}

/// Replaces `m(h)` and `m(-h)` by their average so that the map is exactly
/// symmetric. Missing partners count as zero.
pub fn symmetrize(m: &mut LatticeMap) {
    let mut neg = Vec::new();
    let mut missing = Vec::new();
    // Iteration order is stable while the map is not modified, so the
    // averages can be computed first and written back in the same order.
    let avgs: Vec<f64> = m
        .iter()
        .map(|(h, &a)| {
            neg.clear();
            neg.extend(h.iter().map(|c| -c));
            match m.get(neg.as_slice()) {
                Some(&b) => (a + b) / 2.0,
                None => {
                    missing.push((neg.clone(), a / 2.0));
                    a / 2.0
                }
            }
        })
        .collect();
    for ((_, v), avg) in m.iter_mut().zip(avgs) {
        *v = avg;
    }
    m.extend(missing);
}

/// Pushes a map forward along the projection onto the given coordinates.
pub fn marginal(m: &LatticeMap, coords: &[usize]) -> LatticeMap {
    let mut out = LatticeMap::default();
    for (h, &v) in m {
        let key: Vec<i32> = coords.iter().map(|&i| h[i]).collect();
        *out.entry(key).or_insert(0.0) += v;
    }
    out
}

pub fn total(m: &LatticeMap) -> f64 {
    let mut vals: Vec<f64> = m.values().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals.iter().sum()
}

/// Largest pointwise difference between two maps (missing entries are 0).
pub fn max_abs_diff(a: &LatticeMap, b: &LatticeMap) -> f64 {
    let mut worst = 0.0f64;
    for (h, &va) in a {
        worst = worst.max((va - b.get(h).copied().unwrap_or(0.0)).abs());
    }
    for (h, &vb) in b {
        if !a.contains_key(h) {
            worst = worst.max(vb.abs());
        }
    }
    worst
}

//! Finite-rank Fourier symbols with boundary term.

use crate::error::{Error, Result};
use crate::lattice::{Atom, LevyMeasure};
use crate::levy::JumpMeasure;

/// The truncated symbol on `Z^F`:
/// `λ(θ) = Σ_{x≠y} ν(e_x - e_y)(1 - cos(θ_x - θ_y)) + Σ_x b_x (1 - cos θ_x)`,
/// where `b_x` collects the rates of jumps leaving `F`.
#[derive(Clone, Debug, PartialEq)]
pub struct Symbol {
    rank: usize,
    /// Unordered pairs `x < y` with the combined rate `ν(e_x-e_y) + ν(e_y-e_x)`.
    pairs: Vec<(usize, usize, f64)>,
    boundary: Vec<f64>,
    levy: LevyMeasure,
}

impl Symbol {
    /// Symbol of a jump measure on its whole ground space (no boundary).
    pub fn new(nu: &JumpMeasure) -> Self {
        Self::with_boundary(nu, vec![0.0; nu.rank()]).expect("zero boundary is valid")
    }

    /// Symbol with explicit boundary rates.
    pub fn with_boundary(nu: &JumpMeasure, boundary: Vec<f64>) -> Result<Self> {
        let rank = nu.rank();
        if boundary.len() != rank {
            return Err(Error::DimensionMismatch {
                expected: rank,
                got: boundary.len(),
            });
        }
        let mut table = vec![0.0; rank * rank];
        for j in nu.jumps() {
            table[j.plus * rank + j.minus] += j.rate;
        }
        let mut pairs = Vec::new();
        for x in 0..rank {
            for y in x + 1..rank {
                let r = table[x * rank + y] + table[y * rank + x];
                if r > 0.0 {
                    pairs.push((x, y, r));
                }
            }
        }
        Self::from_parts(rank, pairs, table, boundary)
    }

    /// Symbol of `nu` seen from the generator subset `f`: jumps inside `f`
    /// stay pair jumps, jumps between `x ∈ f` and `y ∉ f` become boundary
    /// rate at `x`. Coordinates follow the order of `f`.
    pub fn restricted(nu: &JumpMeasure, f: &[usize]) -> Result<Self> {
        let n = nu.rank();
        let mut pos = vec![None; n];
        for (k, &x) in f.iter().enumerate() {
            if x >= n {
                return Err(Error::UnknownGenerator { index: x, rank: n });
            }
            if pos[x].is_some() {
                return Err(Error::InvalidArgument(format!("generator {x} listed twice")));
            }
            pos[x] = Some(k);
        }
        let rank = f.len();
        let mut table = vec![0.0; rank * rank];
        let mut boundary = vec![0.0; rank];
        for j in nu.jumps() {
            match (pos[j.plus], pos[j.minus]) {
                (Some(a), Some(b)) => table[a * rank + b] += j.rate,
                (Some(a), None) => boundary[a] += j.rate,
                (None, Some(b)) => boundary[b] += j.rate,
                (None, None) => {}
            }
        }
        let mut pairs = Vec::new();
        for x in 0..rank {
            for y in x + 1..rank {
                let r = table[x * rank + y] + table[y * rank + x];
                if r > 0.0 {
                    pairs.push((x, y, r));
                }
            }
        }
        Self::from_parts(rank, pairs, table, boundary)
    }

    fn from_parts(rank: usize, pairs: Vec<(usize, usize, f64)>, table: Vec<f64>, boundary: Vec<f64>) -> Result<Self> {
        if let Some(&b) = boundary.iter().find(|b| !b.is_finite() || **b < 0.0) {
            return Err(Error::NonFiniteRate(b));
        }
        let mut atoms = Vec::new();
        for x in 0..rank {
            for y in 0..rank {
                let r = table[x * rank + y];
                if x != y && r > 0.0 {
                    atoms.push(Atom {
                        increment: vec![(x, 1), (y, -1)],
                        rate: r,
                    });
                }
            }
        }
        for (x, &b) in boundary.iter().enumerate() {
            if b > 0.0 {
                for sign in [1, -1] {
                    atoms.push(Atom {
                        increment: vec![(x, sign)],
                        rate: b / 2.0,
                    });
                }
            }
        }
        Ok(Self {
            rank,
            pairs,
            boundary,
            levy: LevyMeasure::new(rank, atoms)?,
        })
    }

    /// The symbol `λ ≡ 0` on `Z^rank`.
    pub fn zero(rank: usize) -> Self {
        Self {
            rank,
            pairs: Vec::new(),
            boundary: vec![0.0; rank],
            levy: LevyMeasure::empty(rank),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn boundary(&self) -> &[f64] {
        &self.boundary
    }

    /// The Lévy-Khintchine measure: pair jumps plus boundary unit jumps
    /// `±e_x` at rate `b_x / 2` each.
    pub fn levy_measure(&self) -> &LevyMeasure {
        &self.levy
    }

    /// `sup λ ≤ 2 (q + Σ b_x)`.
    pub fn upper_bound(&self) -> f64 {
        2.0 * self.levy.total_rate()
    }

    /// Evaluates `λ(θ)` from the pair/boundary formula.
    pub fn eval(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.rank {
            return Err(Error::DimensionMismatch {
                expected: self.rank,
                got: theta.len(),
            });
        }
        let cos: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let sin: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
        Ok(self.eval_trig(&cos, &sin))
    }

    /// `λ(θ)` given `cos θ` and `sin θ` coordinatewise.
    pub fn eval_trig(&self, cos: &[f64], sin: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &(x, y, r) in &self.pairs {
            acc += r * (1.0 - (cos[x] * cos[y] + sin[x] * sin[y]));
        }
        for (x, &b) in self.boundary.iter().enumerate() {
            if b > 0.0 {
                acc += b * (1.0 - cos[x]);
            }
        }
        acc.max(0.0)
    }

    /// Evaluates `λ(θ)` as the Lévy-Khintchine sum over the jump measure.
    pub fn eval_lk(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.rank {
            return Err(Error::DimensionMismatch {
                expected: self.rank,
                got: theta.len(),
            });
        }
        Ok(self.levy.exponent(theta))
    }
}

//! Pruned convolution powers of a jump distribution, on compact keys.
//!
//! Lattice points are packed into a `u128` with an offset field per
//! coordinate whenever the rank and coordinate range allow it; a jump is then
//! a single wrapping add. Otherwise points stay as `Vec<i32>`.

use std::hash::Hash;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::lattice::{LatticeMap, LevyMeasure};

pub(crate) trait Codec {
    type Key: Clone + Eq + Hash;
    type Shift;

    fn origin(&self) -> Self::Key;
    fn shift(&self, inc: &[i32]) -> Self::Shift;
    fn add(&self, k: &Self::Key, d: &Self::Shift) -> Self::Key;
    fn neg(&self, k: &Self::Key) -> Self::Key;
    fn decode(&self, k: &Self::Key) -> Vec<i32>;
}

/// Offset encoding `Σ (h_i + B) 2^{bits·i}` with `B = 2^{bits-1}`.
pub(crate) struct Packed {
    rank: usize,
    bits: u32,
    origin: u128,
}

impl Packed {
    /// Fails when coordinates up to `max_coord` in absolute value do not
    /// fit in `128 / rank` bits.
    pub(crate) fn new(rank: usize, max_coord: u64) -> Option<Self> {
        let bits = 128usize.checked_div(rank).map_or(32, |b| b.min(32) as u32);
        if bits < 2 || max_coord >= (1u64 << (bits - 1)) - 1 {
            return None;
        }
        let half = 1u128 << (bits - 1);
        let origin = (0..rank).fold(0u128, |acc, i| acc | (half << (bits as usize * i)));
        Some(Self { rank, bits, origin })
    }
}

impl Codec for Packed {
    type Key = u128;
    type Shift = u128;

    fn origin(&self) -> u128 {
        self.origin
    }

    fn shift(&self, inc: &[i32]) -> u128 {
        inc.iter().enumerate().fold(0u128, |acc, (i, &c)| {
            acc.wrapping_add((c as i128 as u128).wrapping_shl(self.bits * i as u32))
        })
    }

    fn add(&self, k: &u128, d: &u128) -> u128 {
        k.wrapping_add(*d)
    }

    fn neg(&self, k: &u128) -> u128 {
        self.origin.wrapping_mul(2).wrapping_sub(*k)
    }

    fn decode(&self, k: &u128) -> Vec<i32> {
        let mask = (1u128 << self.bits) - 1;
        let half = 1i64 << (self.bits - 1);
        (0..self.rank)
            .map(|i| (((k >> (self.bits as usize * i)) & mask) as i64 - half) as i32)
            .collect()
    }
}

pub(crate) struct Plain {
    rank: usize,
}

impl Codec for Plain {
    type Key = Vec<i32>;
    type Shift = Vec<i32>;

    fn origin(&self) -> Vec<i32> {
        vec![0; self.rank]
    }

    fn shift(&self, inc: &[i32]) -> Vec<i32> {
        inc.to_vec()
    }

    fn add(&self, k: &Vec<i32>, d: &Vec<i32>) -> Vec<i32> {
        k.iter().zip(d).map(|(a, b)| a + b).collect()
    }

    fn neg(&self, k: &Vec<i32>) -> Vec<i32> {
        k.iter().map(|c| -c).collect()
    }

    fn decode(&self, k: &Vec<i32>) -> Vec<i32> {
        k.clone()
    }
}

/// Runs `$body` with `$codec` bound to a packed codec when coordinates up to
/// `$max_coord` fit, and to the plain codec otherwise.
macro_rules! with_codec {
    ($rank:expr, $max_coord:expr, |$codec:ident| $body:expr) => {{
        match $crate::spectral::powers::Packed::new($rank, $max_coord) {
            Some(p) => {
                let $codec = &p;
                $body
            }
            None => {
                let $codec = &$crate::spectral::powers::Plain::new($rank);
                $body
            }
        }
    }};
}
pub(crate) use with_codec;

impl Plain {
    pub(crate) fn new(rank: usize) -> Self {
        Self { rank }
    }
}

/// Largest coordinate reachable in `steps` jumps.
pub(crate) fn coord_bound(levy: &LevyMeasure, steps: usize) -> u64 {
    let inc = levy
        .atoms()
        .iter()
        .flat_map(|a| a.increment.iter().map(|&(_, c)| c.unsigned_abs() as u64))
        .max()
        .unwrap_or(0);
    inc.saturating_mul(steps as u64)
}

pub(crate) type Map<K> = FxHashMap<K, f64>;

/// Iterates the pruned convolution powers `π^{*n}`, `n = 0, 1, ...`.
pub(crate) struct Powers<'a, C: Codec> {
    codec: &'a C,
    step: Vec<(C::Shift, f64)>,
    pub(crate) current: Map<C::Key>,
    /// Total mass pruned so far.
    pub(crate) lost: f64,
    max_support: usize,
}

impl<'a, C: Codec> Powers<'a, C> {
    pub(crate) fn new(codec: &'a C, levy: &LevyMeasure, max_support: usize) -> Self {
        let q = levy.total_rate();
        let step = levy
            .atoms()
            .iter()
            .map(|a| (codec.shift(&a.dense(levy.rank())), a.rate / q))
            .collect();
        let mut current = Map::default();
        current.insert(codec.origin(), 1.0);
        Self {
            codec,
            step,
            current,
            lost: 0.0,
            max_support,
        }
    }

    /// Advances to the next power, pruning at most `budget` of mass.
    ///
    /// Values are dropped smallest first, whole level sets at a time. Since
    /// `h` and `-h` carry identical values, symmetry is preserved.
    pub(crate) fn advance(&mut self, budget: f64) -> Result<()> {
        let mut next: Map<C::Key> = Map::default();
        next.reserve(self.current.len() * 2);
        for (x, &v) in &self.current {
            for (d, p) in &self.step {
                *next.entry(self.codec.add(x, d)).or_insert(0.0) += v * p;
            }
        }
        self.symmetrize(&mut next);

        let mut vals: Vec<f64> = next.values().copied().collect();
        vals.sort_by(f64::total_cmp);
        let mut dropped = 0.0;
        let mut cut = f64::NEG_INFINITY;
        let mut i = 0;
        while i < vals.len() {
            let v = vals[i];
            let mut level = 0.0;
            let mut j = i;
            while j < vals.len() && vals[j] == v {
                level += v;
                j += 1;
            }
            if dropped + level > budget {
                break;
            }
            dropped += level;
            cut = v;
            i = j;
        }
        if cut > f64::NEG_INFINITY {
            next.retain(|_, v| *v > cut);
        }
        if next.len() > self.max_support {
            return Err(Error::SupportBudget(self.max_support));
        }
        self.lost += dropped;
        self.current = next;
        Ok(())
    }

    /// Averages `m(h)` and `m(-h)`; rounding in the convolution can leave
    /// them a few ulps apart.
    fn symmetrize(&self, m: &mut Map<C::Key>) {
        let avgs: Vec<f64> = m
            .iter()
            .map(|(h, &a)| {
                let b = m.get(&self.codec.neg(h)).copied().unwrap_or(0.0);
                (a + b) / 2.0
            })
            .collect();
        let missing: Vec<(C::Key, f64)> = m
            .iter()
            .zip(&avgs)
            .filter_map(|((h, _), &avg)| {
                let n = self.codec.neg(h);
                (!m.contains_key(&n)).then_some((n, avg))
            })
            .collect();
        for ((_, v), avg) in m.iter_mut().zip(avgs) {
            *v = avg;
        }
        m.extend(missing);
    }
}

/// Adds `w * m` into `acc`.
pub(crate) fn add_scaled<K: Clone + Eq + Hash>(acc: &mut Map<K>, m: &Map<K>, w: f64) {
    for (h, &v) in m {
        *acc.entry(h.clone()).or_insert(0.0) += w * v;
    }
}

/// `Σ_h a(h) b(h)`, summed in increasing order.
pub(crate) fn dot<K: Eq + Hash>(a: &Map<K>, b: &Map<K>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut terms: Vec<f64> = small
        .iter()
        .filter_map(|(h, &v)| large.get(h).map(|&w| v * w))
        .collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

pub(crate) fn decode_map<C: Codec>(codec: &C, m: Map<C::Key>) -> LatticeMap {
    m.into_iter().map(|(k, v)| (codec.decode(&k), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_round_trip() {
        let p = Packed::new(3, 1000).unwrap();
        let h = [5, -7, 0];
        let k = p.add(&p.origin(), &p.shift(&h));
        assert_eq!(p.decode(&k), h.to_vec());
        assert_eq!(p.decode(&p.neg(&k)), vec![-5, 7, 0]);
        let k2 = p.add(&k, &p.shift(&[-5, 7, 1]));
        assert_eq!(p.decode(&k2), vec![0, 0, 1]);
    }

    #[test]
    fn packed_full_width() {
        let p = Packed::new(16, 100).unwrap();
        let h: Vec<i32> = (0..16).map(|i| i - 8).collect();
        let k = p.add(&p.origin(), &p.shift(&h));
        assert_eq!(p.decode(&k), h);
        assert_eq!(p.decode(&p.neg(&k)), h.iter().map(|c| -c).collect::<Vec<_>>());
    }

    #[test]
    fn packing_limits() {
        assert!(Packed::new(16, 126).is_some());
        assert!(Packed::new(16, 127).is_none());
        assert!(Packed::new(70, 0).is_none());
        assert!(Packed::new(0, 5).is_some());
    }
}

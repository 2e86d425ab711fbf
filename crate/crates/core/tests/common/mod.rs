//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vpdheat::diagram::{VpdElement, WeightedGraph};
use vpdheat::levy::{build_nu, JumpMeasure, Profile};
use vpdheat::metric::{strengthen, GroundSpace, MetricPair};

/// Modified Bessel function `I_n(x)` from its power series.
pub fn bessel_i(n: u32, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= half * half / (k * (k + n as f64));
        sum += term;
        if term < 1e-18 * sum {
            return sum;
        }
        k += 1.0;
    }
}

/// Heat kernel of the walk on `Z` with unit jumps `±1` at rate 1 each.
pub fn line_kernel(k: i32, t: f64) -> f64 {
    (-2.0 * t).exp() * bessel_i(k.unsigned_abs(), 2.0 * t)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two generators at distance 1, each at distance 1 from the basepoint.
pub fn two_point_space() -> GroundSpace {
    let pair = MetricPair::new(
        vec!["x".into(), "y".into()],
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        vec![1.0, 1.0],
    )
    .unwrap();
    strengthen(&pair).unwrap()
}

/// `ψ ≡ 2`, so every ordered pair jumps at rate 1.
pub fn unit_rate_profile() -> Profile {
    Profile::Table {
        points: vec![(0.0, 2.0)],
    }
}

/// The rate-1 two-generator walk: `h = k(e_x - e_y)` moves by `±1` at rate 1.
pub fn two_point_nu() -> JumpMeasure {
    build_nu(&two_point_space(), &unit_rate_profile()).unwrap()
}

/// Random points in the upper half plane under the Euclidean metric, with
/// the height as distance to the basepoint.
pub fn plane_space(rng: &mut impl Rng, n: usize) -> GroundSpace {
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..3.0), rng.random_range(0.3..2.0)))
        .collect();
    let dist = pts
        .iter()
        .map(|a| {
            pts.iter()
                .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                .collect()
        })
        .collect();
    let labels = (0..n).map(|i| format!("p{i}")).collect();
    let diag = pts.iter().map(|p| p.1).collect();
    strengthen(&MetricPair::new(labels, dist, diag).unwrap()).unwrap()
}

/// Random plane space with the exponential profile `e^{-α r}`.
pub fn exp_fixture(seed: u64, rank: usize) -> JumpMeasure {
    let mut r = rng(seed);
    let alpha = r.random_range(0.5..2.0);
    let space = plane_space(&mut r, rank);
    build_nu(&space, &Profile::Exp { alpha }).unwrap()
}

/// Random plane space with `ψ(r) = 2 r^{-2}`, which gives
/// `ν(e_x - e_y) d1(x,y)² = 1` for every pair.
pub fn inverse_square_fixture(seed: u64, rank: usize) -> JumpMeasure {
    let mut r = rng(seed);
    let space = plane_space(&mut r, rank);
    build_nu(
        &space,
        &Profile::Power {
            c: 2.0,
            p: 2.0,
            r0: Some(1e-6),
        },
    )
    .unwrap()
}

/// A random element with coefficients in `[-c, c]` on `rank` generators.
pub fn random_element(rng: &mut impl Rng, rank: usize, c: i64) -> VpdElement {
    VpdElement::from_coeffs((0..rank).map(|i| (i, rng.random_range(-c..=c))))
}

/// `W1` by exhaustive search: each positive point is matched to a distinct
/// negative point or to the basepoint; leftover negatives go to the
/// basepoint.
pub fn brute_w1(pos: &[usize], neg: &[usize], space: &GroundSpace) -> f64 {
    fn go(i: usize, pos: &[usize], neg: &[usize], used: &mut Vec<bool>, space: &GroundSpace) -> f64 {
        if i == pos.len() {
            return neg
                .iter()
                .zip(used.iter())
                .filter(|(_, &u)| !u)
                .map(|(&y, _)| space.to_base(y))
                .sum();
        }
        let x = pos[i];
        let mut best = space.to_base(x) + go(i + 1, pos, neg, used, space);
        for j in 0..neg.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(space.d1(x, neg[j]) + go(i + 1, pos, neg, used, space));
                used[j] = false;
            }
        }
        best
    }
    go(0, pos, neg, &mut vec![false; neg.len()], space)
}

/// Expands the positive and negative parts of `g` into point lists.
pub fn expand(g: &VpdElement) -> (Vec<usize>, Vec<usize>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, c) in g.iter() {
        let list = if c > 0 { &mut pos } else { &mut neg };
        list.extend(std::iter::repeat(i).take(c.unsigned_abs() as usize));
    }
    (pos, neg)
}

fn components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    count
}

/// Death times of the zero-dimensional classes, by counting components of
/// the sublevel graph at every distinct weight. Keys are `f64::to_bits`.
pub fn threshold_scan_h0(graph: &WeightedGraph) -> BTreeMap<u64, i64> {
    let mut weights: Vec<f64> = graph.edges().iter().map(|e| e.2).collect();
    weights.sort_by(f64::total_cmp);
    weights.dedup();
    let n = graph.vertex_count();
    let mut before = n;
    let mut out = BTreeMap::new();
    for w in weights {
        let edges: Vec<(usize, usize)> = graph.edges().iter().filter(|e| e.2 <= w).map(|e| (e.0, e.1)).collect();
        let now = components(n, &edges);
        if now < before {
            out.insert(w.to_bits(), (before - now) as i64);
        }
        before = now;
    }
    out
}

pub fn random_graph(rng: &mut impl Rng, max_vertices: usize) -> WeightedGraph {
    let n = rng.random_range(1..=max_vertices);
    let p = rng.random_range(0.05..0.6);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                // Few distinct weights, so ties are common.
                edges.push((u, v, rng.random_range(1..=6) as f64 / 2.0));
            }
        }
    }
    WeightedGraph::new(n, edges).unwrap()
}

/// A random atomic measure and a mean-preserving spread of it, so the pair
/// is ordered in convex order.
pub fn convex_pair(rng: &mut impl Rng) -> (vpdheat::mixtures::MixtureMeasure, vpdheat::mixtures::MixtureMeasure) {
    let k = rng.random_range(1..=3);
    let atoms: Vec<(f64, f64)> = (0..k)
        .map(|_| (rng.random_range(0.2..2.0), rng.random_range(0.2..1.0)))
        .collect();
    let mut spread = Vec::new();
    for &(u, w) in &atoms {
        let a = rng.random_range(0.0..u);
        spread.push((u - a, w / 2.0));
        spread.push((u + a, w / 2.0));
    }
    (
        vpdheat::mixtures::MixtureMeasure::new(atoms).unwrap(),
        vpdheat::mixtures::MixtureMeasure::new(spread).unwrap(),
    )
}

/// Random elements of the sum-zero sublattice.
pub fn sum_zero_elements(rng: &mut impl Rng, rank: usize, count: usize) -> Vec<VpdElement> {
    (0..count)
        .map(|_| {
            let g = random_element(rng, rank, 2);
            let s: i64 = g.iter().map(|(_, c)| c).sum();
            &g - &VpdElement::from_coeffs([(0, s)])
        })
        .collect()
}

/// Cayley graph of S3 for the generators (12), (23): a hexagon through the
/// identity, which is the basepoint. The other vertices are listed around the cycle.
pub fn s3_space() -> GroundSpace {
    let labels = ["(12)", "(123)", "(13)", "(132)", "(23)"];
    let pos = |i: usize| i as i32 + 1;
    let cyc = |a: i32, b: i32| {
        let d = (a - b).rem_euclid(6);
        d.min(6 - d) as f64
    };
    let dist = (0..5).map(|i| (0..5).map(|j| cyc(pos(i), pos(j))).collect()).collect();
    let diag = (0..5).map(|i| cyc(pos(i), 0)).collect();
    strengthen(&MetricPair::new(labels.iter().map(|s| s.to_string()).collect(), dist, diag).unwrap()).unwrap()
}

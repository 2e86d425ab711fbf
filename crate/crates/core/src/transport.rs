//! Wasserstein-1 distance between diagrams with the basepoint as a sink,
//! and the translation-invariant metric `ρ` on the group.

use crate::diagram::{Diagram, VpdElement};
use crate::metric::GroundSpace;

/// Solves the square assignment problem for a row-major `n × n` cost matrix.
///
/// Returns the minimum total cost and, for every row, the assigned column.
/// Shortest augmenting paths with potentials, `O(n³)`.
pub fn assignment(cost: &[f64], n: usize) -> (f64, Vec<usize>) {
    assert_eq!(cost.len(), n * n, "cost matrix must be n × n");
    if n == 0 {
        return (0.0, Vec::new());
    }
    // 1-based internal indexing; column 0 is a virtual start column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let i0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = col0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    col1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut rows = vec![0usize; n];
    for j in 1..=n {
        rows[owner[j] - 1] = j - 1;
    }
    let total = (0..n).map(|i| cost[i * n + rows[i]]).sum();
    (total, rows)
}

/// Expands a diagram into a list of generators, one entry per unit of
/// multiplicity.
fn expand(d: &Diagram) -> Vec<usize> {
    d.iter()
        .flat_map(|(g, m)| std::iter::repeat(g).take(m as usize))
        .collect()
}

/// Optimal partial matching cost between two point lists where unmatched
/// points pay their distance to the basepoint.
fn matching_cost(left: &[usize], right: &[usize], space: &GroundSpace) -> f64 {
    let (m, n) = (left.len(), right.len());
    let size = m + n;
    let mut cost = vec![0.0; size * size];
    for i in 0..size {
        for j in 0..size {
            cost[i * size + j] = match (left.get(i), right.get(j)) {
                (Some(&a), Some(&b)) => space.d1(a, b),
                (Some(&a), None) => space.to_base(a),
                (None, Some(&b)) => space.to_base(b),
                (None, None) => 0.0,
            };
        }
    }
    assignment(&cost, size).0
}

/// `W1(a, b)` with the basepoint `[A]` as an infinite sink.
///
/// Mass common to both diagrams is cancelled before matching; this never
/// changes the optimum and keeps the cost matrix small.
pub fn w1(a: &Diagram, b: &Diagram, space: &GroundSpace) -> f64 {
    let (pos, neg) = (&a.to_vpd() - &b.to_vpd()).split();
    matching_cost(&expand(&pos), &expand(&neg), space)
}

/// `ρ(g, h) = W1(α', β')` where `g - h = α' - β'` with disjoint supports.
pub fn rho(g: &VpdElement, h: &VpdElement, space: &GroundSpace) -> f64 {
    let (pos, neg) = (g - h).split();
    matching_cost(&expand(&pos), &expand(&neg), space)
}

/// `ρ(g, 0)`.
pub fn rho_norm(g: &VpdElement, space: &GroundSpace) -> f64 {
    let (pos, neg) = g.split();
    matching_cost(&expand(&pos), &expand(&neg), space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{birth_death_space, strengthen, BirthDeathPoint, MetricPair};

    #[test]
    fn assignment_small() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let (total, rows) = assignment(&cost, 3);
        assert_eq!(total, 5.0);
        assert_eq!(rows, vec![1, 0, 2]);
        assert_eq!(assignment(&[], 0).0, 0.0);
    }

    #[test]
    fn w1_examples() {
        let p = |b, d| BirthDeathPoint::new(b, d).unwrap();
        let s = birth_death_space(&[p(0.0, 10.0), p(1.0, 10.0), p(0.0, 4.0)]).unwrap();
        let g = s.ground();
        let d = |pt| Diagram::from_counts([(s.index_of(&pt).unwrap(), 1)]);
        assert_eq!(w1(&d(p(0.0, 10.0)), &d(p(0.0, 10.0)), g), 0.0);
        assert_eq!(w1(&d(p(0.0, 10.0)), &d(p(1.0, 10.0)), g), 1.0);
        assert_eq!(w1(&d(p(0.0, 4.0)), &Diagram::new(), g), 2.0);
    }

    #[test]
    fn rho_pair_example() {
        let labels = vec!["x".to_string(), "y".to_string()];
        let pair = MetricPair::new(labels, vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![5.0, 4.5]).unwrap();
        let g = strengthen(&pair).unwrap();
        let k = &VpdElement::basis(0) - &VpdElement::basis(1);
        assert_eq!(rho_norm(&k, &g), 1.0);
        assert_eq!(rho(&k, &k, &g), 0.0);
        assert_eq!(rho(&k, &VpdElement::zero(), &g), 1.0);
    }
}

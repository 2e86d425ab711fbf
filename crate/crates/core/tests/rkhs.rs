mod common;

use rand::Rng;

use common::*;
use vpdheat::spectral::rkhs::weighted_norm_sq;
use vpdheat::spectral::{dirichlet_energy, rkhs_norm, QuadratureSpec, Symbol};

const GRID: QuadratureSpec = QuadratureSpec::Grid { nodes: 64 };

fn random_function(r: &mut impl Rng, rank: usize) -> Vec<(Vec<i32>, f64)> {
    let k = r.random_range(1..=4);
    (0..k)
        .map(|_| {
            let h = (0..rank).map(|_| r.random_range(-2..=2)).collect();
            (h, r.random_range(-1.0..1.0))
        })
        .collect()
}

#[test]
fn norms_nest_in_time() {
    let mut r = rng(50);
    for i in 0..5 {
        let sym = Symbol::new(&exp_fixture(60 + i, 2));
        let f = random_function(&mut r, 2);
        let norms: Vec<f64> = [0.0, 0.2, 0.5, 1.0]
            .iter()
            .map(|&t| rkhs_norm(&sym, &f, t, GRID).unwrap().value)
            .collect();
        assert!(norms.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{norms:?}");
        // At t = 0 the norm is the plain ℓ² norm (repeated points add up).
        let mut l2 = std::collections::BTreeMap::new();
        for (h, v) in &f {
            *l2.entry(h.clone()).or_insert(0.0) += v;
        }
        let l2: f64 = l2.values().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norms[0] - l2).abs() < 1e-10);
    }
}

#[test]
fn truncated_norms_increase_to_the_full_norm() {
    let mut r = rng(51);
    for i in 0..5 {
        let nu = exp_fixture(70 + i, 3);
        let f = random_function(&mut r, 3);
        let mut radii: Vec<f64> = nu.jumps().iter().map(|j| j.size).collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let norms: Vec<f64> = radii
            .iter()
            .map(|&rad| rkhs_norm(&Symbol::new(&nu.truncate(rad)), &f, 0.8, GRID).unwrap().value)
            .collect();
        assert!(norms.windows(2).all(|w| w[0] <= w[1] + 1e-10), "{norms:?}");
        let full = rkhs_norm(&Symbol::new(&nu), &f, 0.8, GRID).unwrap().value;
        assert!((norms.last().unwrap() - full).abs() < 1e-12);
    }
}

#[test]
fn dirichlet_energy_of_a_delta() {
    // 𝓔(δ₀, δ₀) = ∫ λ = Σ_κ ν(κ) = q.
    let nu = exp_fixture(80, 3);
    let e = dirichlet_energy(&Symbol::new(&nu), &[(vec![0, 0, 0], 1.0)], GRID).unwrap();
    assert!((e.value - nu.total_rate()).abs() < 1e-10);
    let w = weighted_norm_sq(&Symbol::new(&nu), &[], GRID, |l| l).unwrap();
    assert_eq!(w.value, 0.0);
}

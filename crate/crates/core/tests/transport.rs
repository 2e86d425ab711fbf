mod common;

use proptest::prelude::*;
use rand::Rng;

use common::*;
use vpdheat::diagram::{Diagram, VpdElement};
use vpdheat::metric::{birth_death_space, strengthen, BirthDeathPoint, MetricPair};
use vpdheat::transport::{assignment, rho, rho_norm, w1};

#[test]
fn s3_word_metric() {
    let space = s3_space();
    assert_eq!(space.labels()[1], "(123)");
    assert_eq!(rho_norm(&VpdElement::basis(1), &space), 2.0);
    // (13) is three steps from the identity either way round.
    assert_eq!(rho_norm(&VpdElement::basis(2), &space), 3.0);
    let g = VpdElement::from_coeffs([(1, 1), (3, -1)]);
    assert_eq!(rho_norm(&g, &space), 2.0);
}

#[test]
fn documented_examples() {
    let bd = birth_death_space(&[
        BirthDeathPoint::new(0.0, 10.0).unwrap(),
        BirthDeathPoint::new(1.0, 10.0).unwrap(),
    ])
    .unwrap();
    let a = Diagram::from_counts([(0, 1)]);
    let b = Diagram::from_counts([(1, 1)]);
    assert_eq!(w1(&a, &b, bd.ground()), 1.0);
    assert_eq!(w1(&a, &a, bd.ground()), 0.0);
    let single = birth_death_space(&[BirthDeathPoint::new(0.0, 4.0).unwrap()]).unwrap();
    assert_eq!(
        w1(&Diagram::from_counts([(0, 1)]), &Diagram::new(), single.ground()),
        2.0
    );

    let pair = MetricPair::new(
        vec!["x".into(), "y".into()],
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        vec![5.0, 4.5],
    )
    .unwrap();
    let space = strengthen(&pair).unwrap();
    let g = VpdElement::from_coeffs([(0, 1), (1, -1)]);
    assert_eq!(rho_norm(&g, &space), 1.0);
}

#[test]
fn hungarian_matches_exhaustive_search() {
    let mut r = rng(10);
    for _ in 0..100 {
        let n = r.random_range(1..=5);
        let space = plane_space(&mut r, n);
        let np = r.random_range(0..=3);
        let nn = r.random_range(0..=3);
        let pos: Vec<usize> = (0..np).map(|_| r.random_range(0..n)).collect();
        let neg: Vec<usize> = (0..nn).map(|_| r.random_range(0..n)).collect();
        let g = &VpdElement::from_coeffs(pos.iter().map(|&i| (i, 1)))
            - &VpdElement::from_coeffs(neg.iter().map(|&i| (i, 1)));
        let a = Diagram::from_counts(pos.iter().map(|&i| (i, 1)));
        let b = Diagram::from_counts(neg.iter().map(|&i| (i, 1)));
        let brute = brute_w1(&pos, &neg, &space);
        assert!((w1(&a, &b, &space) - brute).abs() < 1e-12);
        let (p, m) = expand(&g);
        assert!((rho_norm(&g, &space) - brute_w1(&p, &m, &space)).abs() < 1e-12);
    }
}

#[test]
fn assignment_against_permutations() {
    let mut r = rng(2);
    for n in 1..=6 {
        let cost: Vec<f64> = (0..n * n).map(|_| r.random_range(0.0..10.0)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            best = best.min(p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum());
        });
        let (val, cols) = assignment(&cost, n);
        assert!((val - best).abs() < 1e-9);
        let mut seen = cols.clone();
        seen.sort();
        assert_eq!(seen, (0..n).collect::<Vec<_>>());
    }
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

fn small_space() -> impl Strategy<Value = (u64, usize)> {
    (0u64..10_000, 1usize..=5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rho_is_a_translation_invariant_metric((seed, n) in small_space()) {
        let mut r = rng(seed);
        let space = plane_space(&mut r, n);
        let g = random_element(&mut r, n, 3);
        let h = random_element(&mut r, n, 3);
        let k = random_element(&mut r, n, 3);
        let gh = rho(&g, &h, &space);
        prop_assert!((gh - rho(&h, &g, &space)).abs() < 1e-12);
        prop_assert!(gh >= 0.0);
        prop_assert_eq!(gh == 0.0, g == h);
        prop_assert!(rho(&g, &k, &space) <= gh + rho(&h, &k, &space) + 1e-9);
        prop_assert!((rho(&(&g + &k), &(&h + &k), &space) - gh).abs() < 1e-9);
    }

    #[test]
    fn rho_is_dominated_by_mass((seed, n) in small_space()) {
        let mut r = rng(seed);
        let space = plane_space(&mut r, n);
        let g = random_element(&mut r, n, 3);
        prop_assert!(rho_norm(&g, &space) <= g.mass(&space) + 1e-12);
    }

    #[test]
    fn w1_is_symmetric((seed, n) in small_space()) {
        let mut r = rng(seed);
        let space = plane_space(&mut r, n);
        let a = Diagram::from_counts((0..n).map(|i| (i, r.random_range(0..3))));
        let b = Diagram::from_counts((0..n).map(|i| (i, r.random_range(0..3))));
        prop_assert!((w1(&a, &b, &space) - w1(&b, &a, &space)).abs() < 1e-12);
    }
}

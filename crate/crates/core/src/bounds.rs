//! Functional inequalities evaluated as numeric reports: the Lipschitz bound
//! for heat-space functions, the Sobolev/resolvent bound with its extremizer,
//! the mass-tail bound and the covering bound for heat-kernel superlevel
//! sets.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diagram::VpdElement;
use crate::error::{Error, Result};
use crate::lattice::{convolve, delta0, LatticeMap, LevyMeasure};
use crate::levy::JumpMeasure;
use crate::mixtures::lipschitz_precondition;
use crate::montecarlo;
use crate::spectral::heat::HeatKernel;
use crate::spectral::quadrature::{integrate, QuadratureSpec};
use crate::spectral::rkhs::{dirichlet_energy, rkhs_norm, FiniteFunction};
use crate::spectral::symbol::Symbol;
use crate::transport::rho;

/// One achieved ratio (or count) compared against the bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub input: String,
    pub value: f64,
}

/// Outcome of one inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: String,
    /// The `t`, `s` or `α` at which the inequality was evaluated.
    pub parameter: f64,
    pub bound: f64,
    pub witnesses: Vec<Witness>,
    /// Largest witness value.
    pub achieved: f64,
    /// `bound - achieved`.
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// False when a hypothesis needed for the inequality is not met by the
    /// input; the numbers are still reported.
    pub precondition: bool,
    /// Intermediate quantities, by name.
    pub values: BTreeMap<String, f64>,
}

impl BoundReport {
    fn new(theorem: &str, parameter: f64, bound: f64, witnesses: Vec<Witness>, tolerance: f64) -> Self {
        let achieved = witnesses.iter().map(|w| w.value).fold(0.0, f64::max);
        let margin = bound - achieved;
        Self {
            theorem: theorem.into(),
            parameter,
            bound,
            witnesses,
            achieved,
            margin,
            tolerance,
            pass: margin >= -tolerance,
            precondition: true,
            values: BTreeMap::new(),
        }
    }

    fn with_value(mut self, name: &str, v: f64) -> Self {
        self.values.insert(name.into(), v);
        self
    }
}

fn lookup(f: &FiniteFunction, h: &[i32]) -> f64 {
    f.iter().filter(|(p, _)| p == h).map(|(_, v)| v).sum()
}

/// Lipschitz bound `|f(γ) - f(0)| ≤ ‖f‖_{H_t} (-p_t'(0))^{1/2} ρ(γ, 0)`.
///
/// The witnesses are the ratios `|f(γ) - f(0)| / ρ(γ, 0)` over `gammas`.
/// The comparison of characters with `λ` that underlies the bound needs
/// `ν(e_x - e_y) d1(x,y)² ≥ 1` and `γ` in the sum-zero sublattice; when
/// either fails `precondition` is false.
pub fn lipschitz_bound(
    nu: &JumpMeasure,
    f: &FiniteFunction,
    t: f64,
    gammas: &[VpdElement],
    quad: QuadratureSpec,
) -> Result<BoundReport> {
    let sym = Symbol::new(nu);
    let space = nu.space();
    let rank = space.rank();
    let norm = rkhs_norm(&sym, f, t, quad)?;
    let energy = integrate(rank, 1, quad, |node, out| {
        let lam = sym.eval_trig(node.cos, node.sin);
        out[0] = lam * (-t * lam).exp();
    })?;
    let energy = energy.values[0].max(0.0);
    let bound = norm.value * energy.sqrt();

    let f0 = lookup(f, &vec![0; rank]);
    let mut witnesses = Vec::with_capacity(gammas.len());
    for g in gammas {
        if g.is_zero() {
            continue;
        }
        let h = g.to_lattice(rank)?;
        let ratio = (lookup(f, &h) - f0).abs() / rho(g, &VpdElement::zero(), space);
        witnesses.push(Witness {
            input: format!("{h:?}"),
            value: ratio,
        });
    }
    let tol = 1e-9 * (1.0 + bound) + norm.error * energy.sqrt();
    let mut r = BoundReport::new("lipschitz", t, bound, witnesses, tol)
        .with_value("rkhs_norm", norm.value)
        .with_value("energy", energy);
    r.precondition = lipschitz_precondition(nu) && gammas.iter().all(|g| g.iter().map(|(_, c)| c).sum::<i64>() == 0);
    Ok(r)
}

/// Witness elements: every lattice point of a kernel support plus random
/// sums of one to three pair jumps.
pub fn lipschitz_witnesses<R: Rng>(
    nu: &JumpMeasure,
    support: &LatticeMap,
    extra: usize,
    rng: &mut R,
) -> Vec<VpdElement> {
    let mut out: Vec<VpdElement> = support
        .keys()
        .map(|h| VpdElement::from_lattice(h))
        .filter(|g| !g.is_zero())
        .collect();
    out.sort();
    let jumps = nu.jumps();
    if !jumps.is_empty() {
        for _ in 0..extra {
            let k = rng.random_range(1..=3);
            let mut g = VpdElement::zero();
            for _ in 0..k {
                g = &g + &jumps[rng.random_range(0..jumps.len())].element();
            }
            if !g.is_zero() {
                out.push(g);
            }
        }
    }
    out
}

/// Sobolev bound `‖f‖∞² ≤ G_s(0,0) (s‖f‖₂² + 𝓔(f,f))`.
///
/// The single witness is `‖f‖∞² / (s‖f‖₂² + 𝓔(f,f))`, compared against
/// `G_s(0,0)`.
pub fn sobolev_bound(sym: &Symbol, f: &FiniteFunction, s: f64, quad: QuadratureSpec) -> Result<BoundReport> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
    }
    let g = integrate(sym.rank(), 1, quad, |node, out| {
        out[0] = 1.0 / (s + sym.eval_trig(node.cos, node.sin));
    })?;
    let g_s = g.values[0];
    let sup_sq = f.iter().map(|(_, v)| v * v).fold(0.0, f64::max);
    let l2_sq: f64 = f.iter().map(|(_, v)| v * v).sum();
    let energy = dirichlet_energy(sym, f, quad)?;
    let denom = s * l2_sq + energy.value;
    let ratio = if sup_sq == 0.0 { 0.0 } else { sup_sq / denom };
    let witnesses = vec![Witness {
        input: "f".into(),
        value: ratio,
    }];
    let tol = 1e-9 * (1.0 + g_s) + g.errors[0];
    Ok(BoundReport::new("sobolev", s, g_s, witnesses, tol)
        .with_value("sup_norm_sq", sup_sq)
        .with_value("l2_norm_sq", l2_sq)
        .with_value("dirichlet_energy", energy.value)
        .with_value("rhs", g_s * denom))
}

/// Truncated resolvent section `R_s δ₀ = ∫_0^∞ e^{-st} p_t dt`, taken term
/// by term over the compound-Poisson series:
/// `Σ_{n ≤ depth} q^n / (s+q)^{n+1} π^{*n}`.
pub fn resolvent_section(levy: &LevyMeasure, s: f64, depth: usize) -> LatticeMap {
    let q = levy.total_rate();
    let rank = levy.rank();
    let step = levy.jump_distribution();
    let mut power = delta0(rank);
    let mut out = LatticeMap::default();
    let ratio = q / (s + q);
    let mut coef = 1.0 / (s + q);
    for n in 0..=depth {
        for (h, v) in &power {
            *out.entry(h.clone()).or_insert(0.0) += coef * v;
        }
        if n == depth || q == 0.0 {
            break;
        }
        power = convolve(&power, &step);
        coef *= ratio;
    }
    out
}

/// Sobolev report for the truncated resolvent section, whose ratio
/// approaches `G_s(0,0)` as the depth grows.
pub fn sobolev_extremizer(sym: &Symbol, s: f64, depth: usize, quad: QuadratureSpec) -> Result<BoundReport> {
    let section = resolvent_section(sym.levy_measure(), s, depth);
    let mut f: Vec<(Vec<i32>, f64)> = section.into_iter().collect();
    f.sort_by(|a, b| a.0.cmp(&b.0));
    let mut r = sobolev_bound(sym, &f, s, quad)?;
    r.theorem = "sobolev_extremizer".into();
    r.witnesses[0].input = format!("resolvent section, depth {depth}");
    let ratio = r.achieved / r.bound;
    Ok(r.with_value("depth", depth as f64).with_value("ratio_to_bound", ratio))
}

/// Mass-tail bound `P(𝓜(X_t) > R) ≤ t ν{𝓜 > R} + (t/R) Σ_{𝓜(κ) ≤ R} 𝓜(κ) ν(κ)`.
///
/// With `samples = Some((n, seed))` the witness is a Monte Carlo estimate of
/// the tail; the report passes when the estimate plus three standard errors
/// stays below the bound. The tail of `ρ(X_t, 0)`, which `ρ ≤ 𝓜` dominates,
/// is recorded alongside.
pub fn mass_tail_bound(nu: &JumpMeasure, t: f64, radius: f64, samples: Option<(usize, u64)>) -> Result<BoundReport> {
    if !(t.is_finite() && t >= 0.0 && radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need t ≥ 0 and R > 0, got t = {t}, R = {radius}"
        )));
    }
    let mut big = 0.0;
    let mut small = 0.0;
    for j in nu.jumps() {
        if j.mass > radius {
            big += j.rate;
        } else {
            small += j.mass * j.rate;
        }
    }
    let bound = t * big + t / radius * small;
    let mut witnesses = Vec::new();
    let mut values = BTreeMap::new();
    let mut tol = 0.0;
    if let Some((n, seed)) = samples {
        let tails = montecarlo::tail_estimates(nu, t, radius, n, seed)?;
        values.insert("mass_tail_std_error".to_string(), tails.mass.error);
        values.insert("rho_tail".to_string(), tails.rho.value);
        values.insert("rho_tail_std_error".to_string(), tails.rho.error);
        witnesses.push(Witness {
            input: format!("P(M(X_t) > R) + 3 std_error, n = {n}"),
            value: tails.mass.value + 3.0 * tails.mass.error,
        });
        values.insert("mass_tail".to_string(), tails.mass.value);
        tol = 1e-12;
    }
    let mut r = BoundReport::new("mass_tail", t, bound, witnesses, tol)
        .with_value("radius", radius)
        .with_value("large_jump_rate", big)
        .with_value("small_jump_mass_rate", small);
    r.values.extend(values);
    Ok(r)
}

/// Covering bound `|A_t(α)| ≤ min(1/α, Σ p_t² / α²)` for the superlevel set
/// `A_t(α) = {h : p_t(h) ≥ α}` of a series kernel.
///
/// Below half the smallest nonzero `ρ`-distance between members, balls
/// separate the members, so the covering number equals `|A_t(α)|`; that
/// radius is recorded as `epsilon0`. `precondition` is false when `α` does
/// not exceed the kernel deficit, in which case membership near the pruning
/// floor is uncertain.
pub fn covering_bound(kernel: &HeatKernel, alpha: f64, space: &crate::metric::GroundSpace) -> Result<BoundReport> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let mut members: Vec<Vec<i32>> = kernel
        .masses()
        .iter()
        .filter(|(_, &p)| p >= alpha)
        .map(|(h, _)| h.clone())
        .collect();
    members.sort();
    let collision = kernel.collision();
    let bound = (1.0 / alpha).min(collision / (alpha * alpha));
    let elems: Vec<VpdElement> = members.iter().map(|h| VpdElement::from_lattice(h)).collect();
    let mut min_sep = f64::INFINITY;
    for i in 0..elems.len() {
        for j in i + 1..elems.len() {
            min_sep = min_sep.min(rho(&elems[i], &elems[j], space));
        }
    }
    let witnesses = vec![Witness {
        input: format!("{members:?}"),
        value: members.len() as f64,
    }];
    let mut r = BoundReport::new("covering", alpha, bound, witnesses, 1e-12)
        .with_value("t", kernel.t())
        .with_value("collision", collision)
        .with_value("deficit", kernel.deficit())
        .with_value("epsilon0", if min_sep.is_finite() { min_sep / 2.0 } else { 0.0 });
    r.precondition = alpha > kernel.deficit();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{build_nu, Profile};
    use crate::metric::{strengthen, MetricPair};
    use crate::spectral::heat::{heat_series, SeriesOptions};

    fn rate_one() -> JumpMeasure {
        let labels = vec!["x".into(), "y".into()];
        let pair = MetricPair::new(labels, vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 1.0]).unwrap();
        let table = Profile::Table {
            points: vec![(1.0, 2.0)],
        };
        build_nu(&strengthen(&pair).unwrap(), &table).unwrap()
    }

    #[test]
    fn zero_function() {
        let nu = rate_one();
        let g = vec![VpdElement::from_coeffs([(0, 1), (1, -1)])];
        let r = lipschitz_bound(&nu, &[], 0.5, &g, QuadratureSpec::default()).unwrap();
        assert_eq!(r.bound, 0.0);
        assert_eq!(r.achieved, 0.0);
        assert!(r.pass && r.precondition);
        let r = sobolev_bound(&Symbol::new(&nu), &[], 1.0, QuadratureSpec::default()).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn sobolev_delta() {
        let sym = Symbol::new(&rate_one());
        let r = sobolev_bound(&sym, &[(vec![0, 0], 1.0)], 1.0, QuadratureSpec::default()).unwrap();
        assert!((r.bound - 1.0 / 5f64.sqrt()).abs() < 1e-10);
        assert!((r.values["dirichlet_energy"] - 2.0).abs() < 1e-10);
        assert!((r.values["rhs"] - 3.0 / 5f64.sqrt()).abs() < 1e-10);
        assert!(r.pass);
    }

    #[test]
    fn mass_tail_closed_form() {
        let r = mass_tail_bound(&rate_one(), 0.1, 1.0, None).unwrap();
        assert!((r.bound - 0.2).abs() < 1e-15);
        let r = mass_tail_bound(&rate_one(), 0.0, 1.0, Some((10_000, 1))).unwrap();
        assert_eq!(r.bound, 0.0);
        assert_eq!(r.values["mass_tail"], 0.0);
        assert!(r.pass);
    }

    #[test]
    fn covering_examples() {
        let nu = rate_one();
        let k0 = heat_series(&nu.levy_measure(), 0.0, SeriesOptions::default()).unwrap();
        let r = covering_bound(&k0, 0.5, nu.space()).unwrap();
        assert_eq!(r.achieved, 1.0);
        assert_eq!(r.bound, 2.0);
        let k = heat_series(&nu.levy_measure(), 0.5, SeriesOptions::default()).unwrap();
        let r = covering_bound(&k, 0.2, nu.space()).unwrap();
        assert_eq!(r.achieved, 3.0);
        assert!(r.pass && r.precondition);
        let r = covering_bound(&k, 1.01, nu.space()).unwrap();
        assert_eq!(r.achieved, 0.0);
        assert!(r.bound < 1.0);
    }
}

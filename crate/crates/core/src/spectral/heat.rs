//! Heat kernels by the compound-Poisson series and by Fourier inversion.
//!
//! The series route expands `p_t = Σ_n e^{-qt} (qt)^n / n! π^{*n}` with
//! `π = ν / q`, computing convolution powers on a sparse lattice map. The
//! Poisson tail and any mass pruned from the convolution powers are added to
//! a certified deficit.

use crate::error::{Error, Result};
use crate::lattice::{total, LatticeMap, LevyMeasure};
use crate::spectral::powers::{add_scaled, coord_bound, decode_map, dot, with_codec, Codec, Map, Powers};
use crate::spectral::quadrature::{integrate, QuadratureSpec};
use crate::spectral::symbol::Symbol;
use crate::spectral::Estimate;

/// Truncation controls for the series route.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesOptions {
    /// Bound on the total deficit (Poisson tail plus pruned mass).
    pub tol: f64,
    pub max_terms: usize,
    pub max_support: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_terms: 20_000,
            max_support: 4_000_000,
        }
    }
}

impl SeriesOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// A finitely supported approximation of `p_t` with a certified bound on the
/// missing mass.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatKernel {
    rank: usize,
    t: f64,
    masses: LatticeMap,
    deficit: f64,
}

impl HeatKernel {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn masses(&self) -> &LatticeMap {
        &self.masses
    }

    /// Bound on `1 - Σ masses`; also bounds the pointwise error, since
    /// truncation only ever removes mass.
    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    pub fn get(&self, h: &[i32]) -> f64 {
        self.masses.get(h).copied().unwrap_or(0.0)
    }

    pub fn return_probability(&self) -> f64 {
        self.get(&vec![0; self.rank])
    }

    pub fn total_mass(&self) -> f64 {
        total(&self.masses)
    }

    /// `Σ p_t(h)²`.
    pub fn collision(&self) -> f64 {
        let mut v: Vec<f64> = self.masses.values().map(|p| p * p).collect();
        v.sort_by(f64::total_cmp);
        v.iter().sum()
    }

    /// Generator identity `-p_t'(0) = Σ_κ ν(κ) (p_t(0) - p_t(κ))`.
    pub fn energy(&self, levy: &LevyMeasure) -> f64 {
        let p0 = self.return_probability();
        levy.atoms()
            .iter()
            .map(|a| a.rate * (p0 - self.get(&a.dense(self.rank))))
            .sum()
    }
}

/// `ln n!` for `n = 0..=n_max`.
fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n_max {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Poisson weight `e^{-m} m^n / n!`, computed in log space.
pub fn poisson_weight(mean: f64, n: usize, ln_fact: &[f64]) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (-mean + n as f64 * mean.ln() - ln_fact[n]).exp()
}

/// Bound on `Σ_{n > N} e^{-m} m^n / n!`, valid once `N + 2 > m`.
fn poisson_tail(mean: f64, n: usize, ln_fact: &[f64]) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let ratio = mean / (n as f64 + 2.0);
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    poisson_weight(mean, n + 1, ln_fact) / (1.0 - ratio)
}

/// Smallest `N` whose Poisson tail is at most `budget`.
pub fn terms_needed(mean: f64, budget: f64, max_terms: usize) -> Result<usize> {
    if mean == 0.0 {
        return Ok(0);
    }
    let ln_fact = ln_factorials(max_terms + 2);
    (0..=max_terms)
        .find(|&n| poisson_tail(mean, n, &ln_fact) <= budget)
        .ok_or(Error::SeriesBudget {
            tol: budget,
            budget: max_terms,
        })
}

/// Series heat kernel at a single time.
pub fn heat_series(levy: &LevyMeasure, t: f64, opts: SeriesOptions) -> Result<HeatKernel> {
    Ok(heat_series_multi(levy, &[t], opts)?.remove(0))
}

/// Series heat kernels at several times, sharing the convolution powers.
pub fn heat_series_multi(levy: &LevyMeasure, ts: &[f64], opts: SeriesOptions) -> Result<Vec<HeatKernel>> {
    opts.validate()?;
    if let Some(&t) = ts.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::InvalidArgument(format!("time must be nonnegative, got {t}")));
    }
    let rank = levy.rank();
    let q = levy.total_rate();
    let half = opts.tol / 2.0;
    let needed = ts
        .iter()
        .map(|&t| terms_needed(q * t, half, opts.max_terms))
        .collect::<Result<Vec<usize>>>()?;
    let n_max = needed.iter().copied().max().unwrap_or(0);
    let ln_fact = ln_factorials(n_max + 2);
    // Mass pruned at step m is lost from every later power, so it costs at
    // most P(N ≥ m) with N the Poisson term index. Scaling the budget of
    // step m by 1 / P(N ≥ m) keeps the total cost within `half`.
    let mut reach = vec![0.0f64; n_max + 2];
    for (&t, &nk) in ts.iter().zip(&needed) {
        let mut suffix = poisson_tail(q * t, nk, &ln_fact);
        for m in (0..=nk).rev() {
            suffix += poisson_weight(q * t, m, &ln_fact);
            reach[m] = reach[m].max(suffix);
        }
    }
    let share = if n_max > 0 { half / n_max as f64 } else { 0.0 };
    let deficit: Vec<f64> = ts
        .iter()
        .zip(&needed)
        .map(|(&t, &n)| poisson_tail(q * t, n, &ln_fact))
        .collect();
    let series = SeriesPlan {
        levy,
        ts,
        needed: &needed,
        reach: &reach,
        share,
        ln_fact: &ln_fact,
        max_support: opts.max_support,
    };
    let (masses, deficit) = with_codec!(rank, coord_bound(levy, n_max), |codec| series.run(codec, deficit))?;
    Ok(ts
        .iter()
        .zip(masses)
        .zip(deficit)
        .map(|((&t, masses), deficit)| HeatKernel {
            rank,
            t,
            masses,
            deficit,
        })
        .collect())
}

struct SeriesPlan<'a> {
    levy: &'a LevyMeasure,
    ts: &'a [f64],
    needed: &'a [usize],
    reach: &'a [f64],
    share: f64,
    ln_fact: &'a [f64],
    max_support: usize,
}

impl SeriesPlan<'_> {
    fn run<C: Codec>(&self, codec: &C, mut deficit: Vec<f64>) -> Result<(Vec<LatticeMap>, Vec<f64>)> {
        let q = self.levy.total_rate();
        let n_max = self.needed.iter().copied().max().unwrap_or(0);
        let mut powers = Powers::new(codec, self.levy, self.max_support);
        let mut acc: Vec<Map<C::Key>> = (0..self.ts.len()).map(|_| Map::default()).collect();
        for n in 0..=n_max {
            if n > 0 {
                powers.advance(self.share / self.reach[n].max(self.share))?;
            }
            for (k, &t) in self.ts.iter().enumerate() {
                if n > self.needed[k] {
                    continue;
                }
                let w = poisson_weight(q * t, n, self.ln_fact);
                if w == 0.0 {
                    continue;
                }
                deficit[k] += w * powers.lost;
                add_scaled(&mut acc[k], &powers.current, w);
            }
        }
        let masses = acc.into_iter().map(|m| decode_map(codec, m)).collect();
        Ok((masses, deficit))
    }
}

/// Return probabilities `c_n = π^{*n}(0)` of the jump chain for
/// `n = 0..=n_max`, with per-coefficient error bounds.
///
/// Only powers up to `⌈n_max / 2⌉` are formed: by symmetry
/// `c_{2m} = Σ_h π^{*m}(h)²` and `c_{2m+1} = Σ_h π^{*m}(h) π^{*(m+1)}(h)`.
pub fn return_coefficients(levy: &LevyMeasure, n_max: usize, opts: SeriesOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    opts.validate()?;
    let step_budget = opts.tol / n_max.div_ceil(2).max(1) as f64;
    return_coefficients_with(levy, n_max, opts.max_support, |_| step_budget)
}

/// As [`return_coefficients`], pruning at most `budget(m)` of mass when
/// forming power `m`. Mass pruned at power `m` perturbs `c_n` for
/// `n ≥ 2m - 1` only, so callers that weight the coefficients can afford
/// larger budgets for later powers.
pub(crate) fn return_coefficients_with<B>(
    levy: &LevyMeasure,
    n_max: usize,
    max_support: usize,
    budget: B,
) -> Result<(Vec<f64>, Vec<f64>)>
where
    B: Fn(usize) -> f64,
{
    let rank = levy.rank();
    if levy.total_rate() == 0.0 {
        let mut c = vec![0.0; n_max + 1];
        c[0] = 1.0;
        return Ok((c, vec![0.0; n_max + 1]));
    }
    let m_max = n_max.div_ceil(2);
    with_codec!(rank, coord_bound(levy, m_max), |codec| {
        coefficients(codec, levy, n_max, max_support, &budget)
    })
}

fn coefficients<C: Codec, B: Fn(usize) -> f64>(
    codec: &C,
    levy: &LevyMeasure,
    n_max: usize,
    max_support: usize,
    budget: &B,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut c = vec![0.0; n_max + 1];
    let mut err = vec![0.0; n_max + 1];
    let m_max = n_max.div_ceil(2);
    let mut powers = Powers::new(codec, levy, max_support);
    let mut prev = powers.current.clone();
    let mut prev_lost = 0.0;
    for m in 0..=m_max {
        if m > 0 {
            powers.advance(budget(m))?;
            // Odd coefficient 2m - 1 pairs powers m - 1 and m.
            let n = 2 * m - 1;
            if n <= n_max {
                c[n] = dot(&prev, &powers.current);
                err[n] = prev_lost + powers.lost;
            }
        }
        let n = 2 * m;
        if n <= n_max {
            c[n] = dot(&powers.current, &powers.current);
            err[n] = 2.0 * powers.lost;
        }
        if m < m_max {
            prev = powers.current.clone();
            prev_lost = powers.lost;
        }
    }
    Ok((c, err))
}

/// `p_t(g) = ∫ cos<g, θ> e^{-t λ(θ)} dμ(θ)`.
pub fn heat_fourier(sym: &Symbol, g: &[i32], t: f64, quad: QuadratureSpec) -> Result<Estimate> {
    if g.len() != sym.rank() {
        return Err(Error::DimensionMismatch {
            expected: sym.rank(),
            got: g.len(),
        });
    }
    let r = integrate(sym.rank(), 1, quad, |node, out| {
        let phase: f64 = g.iter().zip(node.theta).map(|(&k, th)| k as f64 * th).sum();
        out[0] = phase.cos() * (-t * sym.eval_trig(node.cos, node.sin)).exp();
    })?;
    Ok(Estimate::from_integral(&r, 0))
}

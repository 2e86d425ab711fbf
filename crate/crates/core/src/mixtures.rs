//! Heat-scale mixtures: multipliers `m_η(λ) = Σ w e^{-uλ}`, the kernels and
//! semimetrics they induce, convex order of atomic measures, and the
//! majorization checks between two ordered mixtures.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::diagram::VpdElement;
use crate::error::{Error, Result};
use crate::levy::JumpMeasure;
use crate::spectral::quadrature::{integrate, QuadratureSpec};
use crate::spectral::symbol::Symbol;
use crate::spectral::Estimate;
use crate::transport::rho;

/// Eigenvalue floor for PSD checks, relative to the trace of the larger Gram
/// matrix.
pub const PSD_REL_TOL: f64 = 1e-9;

/// A finite atomic measure `η = Σ w_i δ_{u_i}` on `[0, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct MixtureMeasure {
    atoms: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for MixtureMeasure {
    type Error = Error;

    fn try_from(atoms: Vec<(f64, f64)>) -> Result<Self> {
        MixtureMeasure::new(atoms)
    }
}

impl From<MixtureMeasure> for Vec<(f64, f64)> {
    fn from(m: MixtureMeasure) -> Self {
        m.atoms
    }
}

impl MixtureMeasure {
    /// Validates `u ≥ 0`, `w > 0`, all finite; merges repeated locations and
    /// sorts by location.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMixture("measure has no atoms".into()));
        }
        for &(u, w) in &atoms {
            if !(u.is_finite() && u >= 0.0) {
                return Err(Error::InvalidMixture(format!(
                    "atom location {u} must be finite and ≥ 0"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidMixture(format!("atom weight {w} must be finite and > 0")));
            }
        }
        let mut sorted = atoms;
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
        for (u, w) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == u => last.1 += w,
                _ => merged.push((u, w)),
            }
        }
        Ok(Self { atoms: merged })
    }

    /// `δ_u`.
    pub fn dirac(u: f64) -> Result<Self> {
        Self::new(vec![(u, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// First moment `Σ u w`.
    pub fn first_moment(&self) -> f64 {
        self.atoms.iter().map(|&(u, w)| u * w).sum()
    }

    /// `m_η(λ) = Σ w e^{-uλ}`.
    pub fn multiplier(&self, lambda: f64) -> f64 {
        self.atoms.iter().map(|&(u, w)| w * (-u * lambda).exp()).sum()
    }

    /// Stop-loss transform `Σ w (u - c)_+`.
    pub fn stop_loss(&self, c: f64) -> f64 {
        self.atoms.iter().map(|&(u, w)| w * (u - c).max(0.0)).sum()
    }
}

impl FromStr for MixtureMeasure {
    type Err = Error;

    /// Parses `u:w,u:w,...`.
    fn from_str(s: &str) -> Result<Self> {
        let atoms = s
            .split(',')
            .map(|part| {
                let (u, w) = part
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("expected u:w, got {part:?}")))?;
                let num = |x: &str| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number {x:?} in {s:?}")))
                };
                Ok((num(u)?, num(w)?))
            })
            .collect::<Result<Vec<_>>>()?;
        MixtureMeasure::new(atoms)
    }
}

impl fmt::Display for MixtureMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.atoms.iter().map(|(u, w)| format!("{u}:{w}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Why `η₁ ⪯cx η₂` fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexWitness {
    Mass { mass1: f64, mass2: f64 },
    Mean { mean1: f64, mean2: f64 },
    StopLoss { c: f64, stop_loss1: f64, stop_loss2: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ConvexOrder {
    Holds,
    Fails { witness: ConvexWitness },
}

impl ConvexOrder {
    pub fn holds(&self) -> bool {
        matches!(self, ConvexOrder::Holds)
    }
}

/// Decides `η₁ ⪯cx η₂` for atomic measures: equal mass, equal first moment,
/// and stop-loss dominance at every atom of either measure.
pub fn convex_order(eta1: &MixtureMeasure, eta2: &MixtureMeasure, tol: f64) -> ConvexOrder {
    let (m1, m2) = (eta1.mass(), eta2.mass());
    if (m1 - m2).abs() > tol {
        return ConvexOrder::Fails {
            witness: ConvexWitness::Mass { mass1: m1, mass2: m2 },
        };
    }
    let (a1, a2) = (eta1.first_moment(), eta2.first_moment());
    if (a1 - a2).abs() > tol {
        return ConvexOrder::Fails {
            witness: ConvexWitness::Mean { mean1: a1, mean2: a2 },
        };
    }
    // Both stop-loss transforms are piecewise linear with kinks at atoms and
    // agree (mass and mean equal) outside the hull of the atoms.
    let mut points: Vec<f64> = eta1.atoms().iter().chain(eta2.atoms()).map(|a| a.0).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    for c in points {
        let (s1, s2) = (eta1.stop_loss(c), eta2.stop_loss(c));
        if s1 > s2 + tol {
            return ConvexOrder::Fails {
                witness: ConvexWitness::StopLoss {
                    c,
                    stop_loss1: s1,
                    stop_loss2: s2,
                },
            };
        }
    }
    ConvexOrder::Holds
}

/// `K_η(g, h) = ∫ cos<h - g, θ> m_η(λ(θ)) dμ(θ)`.
pub fn kernel_eta(sym: &Symbol, eta: &MixtureMeasure, g: &[i32], h: &[i32], quad: QuadratureSpec) -> Result<Estimate> {
    if g.len() != sym.rank() || h.len() != sym.rank() {
        return Err(Error::DimensionMismatch {
            expected: sym.rank(),
            got: if g.len() != sym.rank() { g.len() } else { h.len() },
        });
    }
    let d: Vec<i32> = h.iter().zip(g).map(|(a, b)| a - b).collect();
    let r = integrate(sym.rank(), 1, quad, |node, out| {
        let phase: f64 = d.iter().zip(node.theta).map(|(&k, th)| k as f64 * th).sum();
        out[0] = phase.cos() * eta.multiplier(sym.eval_trig(node.cos, node.sin));
    })?;
    Ok(Estimate::from_integral(&r, 0))
}

/// Gram matrix, semimetric table and scalar invariants of one mixture on a
/// sample of group elements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureKernelReport {
    pub gram: Vec<Vec<f64>>,
    /// `d_η` from `K(g,g) + K(h,h) - 2K(g,h)`.
    pub d_eta: Vec<Vec<f64>>,
    /// `d_η` from `(∫ |e^{i<h-g,θ>} - 1|² m_η(λ) dμ)^{1/2}`.
    pub d_eta_spectral: Vec<Vec<f64>>,
    /// `∫ λ m_η(λ) dμ`; `None` would mean infinite.
    pub a_eta: Option<f64>,
    /// `K_η(0, 0)`.
    pub b_eta: f64,
    pub min_eigenvalue: f64,
}

/// Evaluates both mixtures on the same quadrature nodes.
fn mixture_reports(
    sym: &Symbol,
    etas: [&MixtureMeasure; 2],
    points: &[Vec<i32>],
    quad: QuadratureSpec,
) -> Result<[MixtureKernelReport; 2]> {
    let n = points.len();
    let mut index: FxHashMap<Vec<i32>, usize> = FxHashMap::default();
    let mut diffs: Vec<Vec<i32>> = Vec::new();
    let mut slot = vec![0usize; n * n];
    for i in 0..n {
        for j in 0..n {
            let d: Vec<i32> = points[j].iter().zip(&points[i]).map(|(a, b)| a - b).collect();
            let k = *index.entry(d.clone()).or_insert_with(|| {
                diffs.push(d);
                diffs.len() - 1
            });
            slot[i * n + j] = k;
        }
    }
    let nd = diffs.len();
    // Per mixture: nd kernel values, nd spectral d², then A and B.
    let stride = 2 * nd + 2;
    let r = integrate(sym.rank(), 2 * stride, quad, |node, out| {
        let lam = sym.eval_trig(node.cos, node.sin);
        for (e, eta) in etas.iter().enumerate() {
            let m = eta.multiplier(lam);
            let base = e * stride;
            for (k, d) in diffs.iter().enumerate() {
                let c = d
                    .iter()
                    .zip(node.theta)
                    .map(|(&x, th)| x as f64 * th)
                    .sum::<f64>()
                    .cos();
                out[base + k] = c * m;
                out[base + nd + k] = 2.0 * (1.0 - c) * m;
            }
            out[base + 2 * nd] = lam * m;
            out[base + 2 * nd + 1] = m;
        }
    })?;
    let build = |e: usize| -> MixtureKernelReport {
        let base = e * stride;
        let k = |i: usize, j: usize| r.values[base + slot[i * n + j]];
        let gram: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| k(i, j)).collect()).collect();
        let d_eta = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (k(i, i) + k(j, j) - 2.0 * k(i, j)).max(0.0).sqrt())
                    .collect()
            })
            .collect();
        let d_eta_spectral = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| r.values[base + nd + slot[i * n + j]].max(0.0).sqrt())
                    .collect()
            })
            .collect();
        let a = r.values[base + 2 * nd];
        MixtureKernelReport {
            min_eigenvalue: min_eigenvalue(&gram),
            gram,
            d_eta,
            d_eta_spectral,
            a_eta: a.is_finite().then_some(a),
            b_eta: r.values[base + 2 * nd + 1],
        }
    };
    Ok([build(0), build(1)])
}

/// Kernel report for a single mixture.
pub fn mixture_report(
    sym: &Symbol,
    eta: &MixtureMeasure,
    points: &[Vec<i32>],
    quad: QuadratureSpec,
) -> Result<MixtureKernelReport> {
    let [r, _] = mixture_reports(sym, [eta, eta], points, quad)?;
    Ok(r)
}

pub fn min_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return 0.0;
    }
    let mat = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    SymmetricEigen::new(mat)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// One inequality of the majorization suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorizationCheck {
    pub name: String,
    /// Smallest slack `rhs - lhs` over all entries (negative means violated).
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl MajorizationCheck {
    fn new(name: &str, margin: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            margin,
            tolerance,
            pass: margin >= -tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorizationReport {
    pub eta1: MixtureMeasure,
    pub eta2: MixtureMeasure,
    pub convex_order: ConvexOrder,
    pub checks: Vec<MajorizationCheck>,
    pub report1: MixtureKernelReport,
    pub report2: MixtureKernelReport,
    pub gram_difference_min_eigenvalue: f64,
    /// Whether every pair jump satisfies `ν(e_x - e_y) d1(x,y)² ≥ 1`, the
    /// condition under which `|χ_θ(γ) - 1|² ≤ λ(θ) ρ(γ,0)²` holds on the
    /// sum-zero sublattice. The transport comparison is only asserted when
    /// it holds and every element has coefficient sum zero.
    pub lipschitz_precondition: bool,
}

impl MajorizationReport {
    pub fn all_pass(&self) -> bool {
        self.convex_order.holds() && self.checks.iter().all(|c| c.pass)
    }
}

/// Verifies the consequences of `η₁ ⪯cx η₂` on a sample of elements:
/// PSD Gram difference, ordering of `d_η`, of `B_η` and of `A_η`, and
/// `d_{η₂} ≤ A_{η₂}^{1/2} ρ`.
pub fn majorization_suite(
    nu: &JumpMeasure,
    eta1: &MixtureMeasure,
    eta2: &MixtureMeasure,
    elements: &[VpdElement],
    quad: QuadratureSpec,
) -> Result<MajorizationReport> {
    let order = convex_order(eta1, eta2, 1e-12);
    if !order.holds() {
        return Err(Error::InvalidMixture(format!(
            "{eta1} is not below {eta2} in convex order"
        )));
    }
    let space = nu.space();
    let rank = space.rank();
    let points = elements
        .iter()
        .map(|g| g.to_lattice(rank))
        .collect::<Result<Vec<_>>>()?;
    let sym = Symbol::new(nu);
    let [r1, r2] = mixture_reports(&sym, [eta1, eta2], &points, quad)?;
    let n = points.len();

    let trace2: f64 = (0..n).map(|i| r2.gram[i][i]).sum();
    let diff: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| r2.gram[i][j] - r1.gram[i][j]).collect())
        .collect();
    let diff_min = min_eigenvalue(&diff);
    let abs_tol = 1e-10 * (1.0 + r2.b_eta.abs());

    let mut d_margin = f64::INFINITY;
    let mut rho_margin = f64::INFINITY;
    let a2 = r2.a_eta.unwrap_or(f64::INFINITY);
    for i in 0..n {
        for j in 0..n {
            d_margin = d_margin.min(r2.d_eta[i][j] - r1.d_eta[i][j]);
            let dist = rho(&elements[i], &elements[j], space);
            rho_margin = rho_margin.min(a2.sqrt() * dist - r2.d_eta_spectral[i][j]);
        }
    }
    if n == 0 {
        d_margin = 0.0;
        rho_margin = 0.0;
    }
    let a_margin = match (r1.a_eta, r2.a_eta) {
        (Some(a1), Some(a2)) => a2 - a1,
        _ => 0.0,
    };
    let precondition =
        lipschitz_precondition(nu) && elements.iter().all(|g| g.iter().map(|(_, c)| c).sum::<i64>() == 0);

    let mut checks = vec![
        MajorizationCheck::new(
            "gram_difference_psd",
            diff_min,
            PSD_REL_TOL * trace2.abs().max(f64::MIN_POSITIVE),
        ),
        MajorizationCheck::new("d_eta_order", d_margin, 1e-7 * (1.0 + r2.b_eta.abs()).sqrt()),
        MajorizationCheck::new("b_eta_order", r2.b_eta - r1.b_eta, abs_tol),
        MajorizationCheck::new("a_eta_order", a_margin, abs_tol),
    ];
    if precondition {
        checks.push(MajorizationCheck::new(
            "d_eta2_below_sqrt_a_rho",
            rho_margin,
            1e-7 * (1.0 + a2.abs()).sqrt(),
        ));
    }
    Ok(MajorizationReport {
        eta1: eta1.clone(),
        eta2: eta2.clone(),
        convex_order: order,
        checks,
        report1: r1,
        report2: r2,
        gram_difference_min_eigenvalue: diff_min,
        lipschitz_precondition: precondition,
    })
}

/// True when `(ν(e_x - e_y) + ν(e_y - e_x)) d1(x, y)² ≥ 2` for every pair
/// with `x ≠ y`.
pub fn lipschitz_precondition(nu: &JumpMeasure) -> bool {
    let space = nu.space();
    let n = space.rank();
    let mut combined = vec![0.0; n * n];
    for j in nu.jumps() {
        combined[j.plus * n + j.minus] += j.rate;
        combined[j.minus * n + j.plus] += j.rate;
    }
    (0..n).all(|x| {
        (x + 1..n).all(|y| {
            let d = space.d1(x, y);
            combined[x * n + y] * d * d >= 2.0 * (1.0 - 1e-12)
        })
    })
}

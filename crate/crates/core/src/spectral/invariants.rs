//! Return probability, collision probability, heat-kernel energy, spectral
//! scale and the diagonal resolvent, each computed by a spectral integral and
//! by a kernel-side formula.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LevyMeasure;
use crate::spectral::heat::{
    heat_series_multi, poisson_weight, return_coefficients_with, terms_needed, HeatKernel, SeriesOptions,
};
use crate::spectral::quadrature::{integrate, Integral, QuadratureSpec};
use crate::spectral::symbol::Symbol;
use crate::spectral::Estimate;

/// Agreement demanded of grid quadrature against the kernel side.
pub const GRID_CROSS_TOL: f64 = 1e-8;
/// Standard errors allowed for Monte Carlo quadrature.
pub const MC_SIGMAS: f64 = 3.0;

/// Both routes for one quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub spectral: f64,
    pub spectral_err: f64,
    pub kernel: f64,
    pub kernel_err: f64,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CrossCheck {
    pub fn new(spectral: Estimate, kernel: Estimate, quad: &QuadratureSpec) -> Self {
        let quad_tol = if quad.is_grid() {
            GRID_CROSS_TOL
        } else {
            MC_SIGMAS * spectral.error
        };
        let tolerance = quad_tol + kernel.error;
        let discrepancy = (spectral.value - kernel.value).abs();
        Self {
            spectral: spectral.value,
            spectral_err: spectral.error,
            kernel: kernel.value,
            kernel_err: kernel.error,
            discrepancy,
            tolerance,
            pass: discrepancy <= tolerance,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeRow {
    pub t: f64,
    #[serde(rename = "return")]
    pub return_probability: CrossCheck,
    pub collision: CrossCheck,
    pub energy: CrossCheck,
    pub scale: CrossCheck,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventRow {
    pub s: f64,
    pub resolvent: CrossCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub times: Vec<TimeRow>,
    pub resolvents: Vec<ResolventRow>,
    pub quadrature: QuadratureSpec,
    /// Grid passes that stopped at the node cap before agreeing.
    pub quadrature_converged: bool,
}

impl InvariantReport {
    pub fn checks(&self) -> impl Iterator<Item = (String, &CrossCheck)> {
        let times = self.times.iter().flat_map(|r| {
            [
                (format!("return@t={}", r.t), &r.return_probability),
                (format!("collision@t={}", r.t), &r.collision),
                (format!("energy@t={}", r.t), &r.energy),
                (format!("scale@t={}", r.t), &r.scale),
            ]
        });
        let res = self
            .resolvents
            .iter()
            .map(|r| (format!("resolvent@s={}", r.s), &r.resolvent));
        times.chain(res)
    }

    pub fn all_pass(&self) -> bool {
        self.checks().all(|(_, c)| c.pass)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantOptions {
    pub series: SeriesOptions,
    /// Target for the certified error of the kernel-side resolvent.
    pub resolvent_tol: f64,
}

impl Default for InvariantOptions {
    fn default() -> Self {
        Self {
            series: SeriesOptions::default(),
            resolvent_tol: 1e-9,
        }
    }
}

/// Spectral side: `∫e^{-tλ}`, `∫e^{-2tλ}`, `∫λe^{-tλ}` per `t` and
/// `∫(s+λ)^{-1}` per `s`, in a single quadrature pass.
pub fn spectral_integrals(sym: &Symbol, ts: &[f64], ss: &[f64], quad: QuadratureSpec) -> Result<Integral> {
    let nt = ts.len();
    integrate(sym.rank(), 3 * nt + ss.len(), quad, |node, out| {
        let lam = sym.eval_trig(node.cos, node.sin);
        for (k, &t) in ts.iter().enumerate() {
            let e = (-t * lam).exp();
            out[3 * k] = e;
            out[3 * k + 1] = e * e;
            out[3 * k + 2] = lam * e;
        }
        for (k, &s) in ss.iter().enumerate() {
            out[3 * nt + k] = 1.0 / (s + lam);
        }
    })
}

/// Kernel-side diagonal resolvent `G_s(0,0) = ∫_0^∞ e^{-st} p_t(0) dt`.
///
/// `p_t(0) = Σ_n w_n(t) c_n` with Poisson weights `w_n` and jump-chain
/// return probabilities `c_n`; the time integral is taken by composite
/// Simpson on `[0, T]`. The returned error bounds the tail beyond `T`, the
/// Simpson remainder (using `|d⁴/dt⁴ e^{-st}p_t(0)| ≤ (s + 2Q)⁴`), the
/// Poisson truncation and the coefficient errors, each given a fifth of
/// `tol`.
pub fn resolvent_kernel(levy: &LevyMeasure, ss: &[f64], tol: f64, opts: SeriesOptions) -> Result<Vec<Estimate>> {
    if let Some(&s) = ss.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "resolvent parameter must be positive, got {s}"
        )));
    }
    let q = levy.total_rate();
    if q == 0.0 {
        return Ok(ss.iter().map(|s| Estimate::exact(1.0 / s)).collect());
    }
    let part = tol / 5.0;
    let horizon = |s: f64| ((1.0 / (s * part)).ln() / s).max(0.0);
    let t_max = ss.iter().map(|&s| horizon(s)).fold(0.0, f64::max);
    let s_min = ss.iter().copied().fold(f64::INFINITY, f64::min);
    let n_max = terms_needed(q * t_max, part * s_min, opts.max_terms)?;
    // Coefficient c_n enters with Laplace weight q^n / (s+q)^{n+1}, at most
    // r^n / s_min with r = q / (s_min + q). Mass pruned at power m perturbs
    // c_n for n ≥ 2m - 1 by at most twice the mass, so a budget scaled by
    // r^{1-2m} keeps the weighted coefficient error within `part`.
    opts.validate()?;
    let r = q / (s_min + q);
    let m_max = n_max.div_ceil(2).max(1);
    let (c, c_err) = return_coefficients_with(levy, n_max, opts.max_support, |m| {
        let weight = r.powi(2 * m as i32 - 1);
        (part * s_min / (2.0 * m_max as f64 * weight)).min(1.0)
    })?;

    let mut ln_fact = vec![0.0; n_max + 2];
    for k in 1..ln_fact.len() {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let p0 = |t: f64| -> f64 {
        let mut acc = 0.0;
        for (n, &cn) in c.iter().enumerate() {
            acc += poisson_weight(q * t, n, &ln_fact) * cn;
        }
        acc
    };

    ss.iter()
        .map(|&s| {
            let t_end = horizon(s);
            let d4 = (s + 2.0 * q).powi(4);
            // Simpson: T h⁴ M / 180 ≤ part.
            let h_max = (180.0 * part / (t_end * d4)).powf(0.25);
            let mut m = ((t_end / h_max).ceil() as usize).max(2);
            if m % 2 == 1 {
                m += 1;
            }
            let h = t_end / m as f64;
            let mut acc = 0.0;
            for i in 0..=m {
                let t = i as f64 * h;
                let w = if i == 0 || i == m {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * (-s * t).exp() * p0(t);
            }
            let value = acc * h / 3.0;
            let simpson = t_end * h.powi(4) * d4 / 180.0;
            let tail = (-s * t_end).exp() / s;
            // The pruned coefficients stay in [0, 1], so the Simpson bound
            // above covers the computed integrand; their error enters only
            // through its exact Laplace transform.
            let mut coeff = 0.0;
            let mut w = 1.0 / (s + q);
            for &e in &c_err {
                coeff += e * w;
                w *= q / (s + q);
            }
            let error = tail + simpson + part + coeff;
            Ok(Estimate { value, error })
        })
        .collect()
}

/// Computes all invariants on the given grids by both routes.
pub fn invariants(
    sym: &Symbol,
    ts: &[f64],
    ss: &[f64],
    quad: QuadratureSpec,
    opts: InvariantOptions,
) -> Result<InvariantReport> {
    let kernels = heat_series_multi(sym.levy_measure(), ts, opts.series)?;
    invariants_from_kernels(sym, &kernels, ss, quad, opts)
}

/// As [`invariants`], reusing series kernels already computed for the
/// time grid.
pub fn invariants_from_kernels(
    sym: &Symbol,
    kernels: &[HeatKernel],
    ss: &[f64],
    quad: QuadratureSpec,
    opts: InvariantOptions,
) -> Result<InvariantReport> {
    let ts: Vec<f64> = kernels.iter().map(|k| k.t()).collect();
    let ts = ts.as_slice();
    let spec = spectral_integrals(sym, ts, ss, quad)?;
    let levy = sym.levy_measure();
    let q = levy.total_rate();

    let mut times = Vec::with_capacity(ts.len());
    for (k, (&t, kern)) in ts.iter().zip(kernels).enumerate() {
        let d = kern.deficit();
        let ret_k = Estimate {
            value: kern.return_probability(),
            error: d,
        };
        let col_k = Estimate {
            value: kern.collision(),
            error: 2.0 * d,
        };
        let en_k = Estimate {
            value: kern.energy(levy),
            error: q * d,
        };
        let ret_s = Estimate::from_integral(&spec, 3 * k);
        let col_s = Estimate::from_integral(&spec, 3 * k + 1);
        let en_s = Estimate::from_integral(&spec, 3 * k + 2);
        times.push(TimeRow {
            t,
            return_probability: CrossCheck::new(ret_s, ret_k, &quad),
            collision: CrossCheck::new(col_s, col_k, &quad),
            energy: CrossCheck::new(en_s, en_k, &quad),
            scale: CrossCheck::new(ratio(en_s, ret_s), ratio(en_k, ret_k), &quad),
        });
    }

    let g_k = resolvent_kernel(levy, ss, opts.resolvent_tol, opts.series)?;
    let resolvents = ss
        .iter()
        .zip(g_k)
        .enumerate()
        .map(|(k, (&s, gk))| ResolventRow {
            s,
            resolvent: CrossCheck::new(Estimate::from_integral(&spec, 3 * ts.len() + k), gk, &quad),
        })
        .collect();
    Ok(InvariantReport {
        times,
        resolvents,
        quadrature: quad,
        quadrature_converged: spec.converged,
    })
}

/// `a / b` with a first-order error bound.
fn ratio(a: Estimate, b: Estimate) -> Estimate {
    let value = a.value / b.value;
    let denom = (b.value - b.error).max(f64::MIN_POSITIVE);
    Estimate {
        value,
        error: (a.error + value.abs() * b.error) / denom,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Atom;

    fn rate_one() -> Symbol {
        use crate::levy::{build_nu, Profile};
        use crate::metric::{strengthen, MetricPair};
        let labels = vec!["x".into(), "y".into()];
        let pair = MetricPair::new(labels, vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 1.0]).unwrap();
        let table = Profile::Table {
            points: vec![(1.0, 2.0)],
        };
        Symbol::new(&build_nu(&strengthen(&pair).unwrap(), &table).unwrap())
    }

    #[test]
    fn resolvent_of_rate_one_walk() {
        let g = resolvent_kernel(rate_one().levy_measure(), &[1.0], 1e-9, SeriesOptions::default()).unwrap();
        assert!((g[0].value - 1.0 / 5f64.sqrt()).abs() <= g[0].error);
        assert!(g[0].error < 1e-8);
    }

    #[test]
    fn empty_measure_resolvent() {
        let levy = LevyMeasure::new(1, Vec::<Atom>::new()).unwrap();
        let g = resolvent_kernel(&levy, &[2.0], 1e-9, SeriesOptions::default()).unwrap();
        assert_eq!(g[0].value, 0.5);
    }

    #[test]
    fn report_agrees_at_time_zero() {
        let r = invariants(
            &rate_one(),
            &[0.0, 0.5],
            &[1.0],
            QuadratureSpec::default(),
            InvariantOptions::default(),
        )
        .unwrap();
        assert_eq!(r.times[0].return_probability.kernel, 1.0);
        assert!((r.times[0].return_probability.spectral - 1.0).abs() < 1e-14);
        assert!(r.all_pass(), "{r:#?}");
    }
}

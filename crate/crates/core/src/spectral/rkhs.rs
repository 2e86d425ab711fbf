//! Norms of finitely supported functions computed on the Fourier side.

use crate::error::{Error, Result};
use crate::spectral::quadrature::{integrate, QuadratureSpec};
use crate::spectral::symbol::Symbol;
use crate::spectral::Estimate;

/// A finitely supported function on `Z^rank` as `(point, value)` pairs.
pub type FiniteFunction = [(Vec<i32>, f64)];

fn check_dims(sym: &Symbol, f: &FiniteFunction) -> Result<()> {
    match f.iter().find(|(h, _)| h.len() != sym.rank()) {
        Some((h, _)) => Err(Error::DimensionMismatch {
            expected: sym.rank(),
            got: h.len(),
        }),
        None => Ok(()),
    }
}

/// `∫ |f̂(θ)|² w(λ(θ)) dμ(θ)` with `f̂(θ) = Σ_h f(h) e^{i<h, θ>}`.
pub fn weighted_norm_sq<W>(sym: &Symbol, f: &FiniteFunction, quad: QuadratureSpec, weight: W) -> Result<Estimate>
where
    W: Fn(f64) -> f64 + Sync,
{
    check_dims(sym, f)?;
    if f.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    let r = integrate(sym.rank(), 1, quad, |node, out| {
        let (mut re, mut im) = (0.0, 0.0);
        for (h, v) in f {
            let phase: f64 = h.iter().zip(node.theta).map(|(&k, th)| k as f64 * th).sum();
            re += v * phase.cos();
            im += v * phase.sin();
        }
        out[0] = (re * re + im * im) * weight(sym.eval_trig(node.cos, node.sin));
    })?;
    Ok(Estimate::from_integral(&r, 0))
}

/// `‖f‖_{H_t} = (∫ |f̂|² e^{tλ} dμ)^{1/2}`.
pub fn rkhs_norm(sym: &Symbol, f: &FiniteFunction, t: f64, quad: QuadratureSpec) -> Result<Estimate> {
    let sq = weighted_norm_sq(sym, f, quad, |lam| (t * lam).exp())?;
    Ok(sqrt_estimate(sq))
}

/// Dirichlet energy `𝓔(f, f) = ∫ λ |f̂|² dμ`.
pub fn dirichlet_energy(sym: &Symbol, f: &FiniteFunction, quad: QuadratureSpec) -> Result<Estimate> {
    weighted_norm_sq(sym, f, quad, |lam| lam)
}

pub fn sqrt_estimate(e: Estimate) -> Estimate {
    let value = e.value.max(0.0).sqrt();
    let error = if value > 0.0 {
        e.error / (2.0 * value)
    } else {
        e.error.sqrt()
    };
    Estimate { value, error }
}

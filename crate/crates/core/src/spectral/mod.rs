//! Fourier symbols, heat kernels, spectral invariants, RKHS norms and
//! character Lipschitz data on `Z^F`.

pub mod character;
pub mod heat;
pub mod invariants;
mod powers;
pub mod quadrature;
pub mod rkhs;
pub mod symbol;

use serde::{Deserialize, Serialize};

use crate::spectral::quadrature::Integral;

pub use character::{char_lipschitz, CharLipschitz};
pub use heat::{heat_fourier, heat_series, heat_series_multi, HeatKernel, SeriesOptions};
pub use invariants::{invariants, invariants_from_kernels, CrossCheck, InvariantOptions, InvariantReport};
pub use quadrature::{integrate, QuadratureSpec};
pub use rkhs::{dirichlet_energy, rkhs_norm};
pub use symbol::Symbol;

/// A numeric value with an error estimate: a standard error for Monte Carlo,
/// a resolution gap for grids, or a certified bound for kernel-side values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }

    pub fn from_integral(r: &Integral, k: usize) -> Self {
        Self {
            value: r.values[k],
            error: r.errors[k],
        }
    }
}

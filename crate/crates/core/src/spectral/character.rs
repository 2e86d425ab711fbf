//! Phase maps of characters and their Lipschitz constants.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::diagram::VpdElement;
use crate::error::{Error, Result};
use crate::metric::GroundSpace;
use crate::transport::rho_norm;

/// Lipschitz data of `χ_θ` with respect to `ρ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharLipschitz {
    /// Lipschitz constant of the phase map `F ∪ {[A]} → R/2πZ`.
    pub phase_lip: f64,
    /// `Lip_ρ(χ_θ)` lies in `[lower, upper]`.
    pub lower: f64,
    pub upper: f64,
}

/// Geodesic distance on the circle `R/2πZ`.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn check_angles(space: &GroundSpace, theta: &[f64]) -> Result<()> {
    if theta.len() != space.rank() {
        return Err(Error::DimensionMismatch {
            expected: space.rank(),
            got: theta.len(),
        });
    }
    Ok(())
}

/// Phase Lipschitz constant over all pairs of `F ∪ {[A]}` (the basepoint has
/// phase 0), with the bracket `[2/π · L, L]` for `Lip_ρ(χ_θ)`.
pub fn char_lipschitz(space: &GroundSpace, theta: &[f64]) -> Result<CharLipschitz> {
    check_angles(space, theta)?;
    let n = space.rank();
    let phase = |u: Option<usize>| u.map_or(0.0, |i| theta[i]);
    let pts: Vec<Option<usize>> = std::iter::once(None).chain((0..n).map(Some)).collect();
    let mut lip = 0.0f64;
    for (a, &u) in pts.iter().enumerate() {
        for &v in &pts[a + 1..] {
            let d = space.dist_pointed(u, v);
            if d > 0.0 {
                lip = lip.max(circle_dist(phase(u), phase(v)) / d);
            }
        }
    }
    Ok(CharLipschitz {
        phase_lip: lip,
        lower: 2.0 / PI * lip,
        upper: lip,
    })
}

/// `|χ_θ(γ) - 1| / ρ(γ, 0)` for `γ ≠ 0`.
pub fn char_ratio(space: &GroundSpace, theta: &[f64], gamma: &VpdElement) -> Result<f64> {
    check_angles(space, theta)?;
    gamma.check_support(space)?;
    let phase: f64 = gamma.iter().map(|(g, n)| n as f64 * theta[g]).sum();
    let chord = 2.0 * (phase / 2.0).sin().abs();
    Ok(chord / rho_norm(gamma, space))
}

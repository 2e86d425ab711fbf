//! Heat semigroups and compound-Poisson random walks on finite-rank groups of
//! virtual persistence diagrams.
//!
//! The crate follows one chain of constructions: a metric pair is
//! strengthened into a pointed ground space ([`metric`]); diagrams and their
//! formal differences live in the free abelian group on its points
//! ([`diagram`]), metrized by optimal transport with the basepoint as sink
//! ([`transport`]). A jump profile turns ground distances into a symmetric
//! pair-jump measure ([`levy`]) whose Fourier symbol drives the heat
//! semigroup ([`spectral`]). Invariants, functional inequalities and mixture
//! kernels are computed from there ([`bounds`], [`mixtures`],
//! [`montecarlo`]), and [`pipeline`] runs the whole chain on weighted graphs.

pub mod bounds;
pub mod diagram;
pub mod error;
pub mod lattice;
pub mod levy;
pub mod metric;
pub mod mixtures;
pub mod montecarlo;
pub mod pipeline;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};

//! Lamb dipoles in the quasi-geostrophic shallow-water model: the
//! analytic travelling wave, a penalized energy maximizer that recovers it,
//! and a pseudo-spectral evolution solver to probe its orbital stability.

pub mod dipole;
pub mod error;
pub mod evolve;
pub mod field;
pub mod functionals;
pub mod io;
pub mod maximizer;
pub mod quadrature;
pub mod specfun;

pub use dipole::{DipoleParams, RadialProfile};
pub use error::{Error, Result};
pub use field::{GridSpec, ScalarField, SpectralBox};
pub use functionals::{AdmissibleSpec, Functionals};
pub use maximizer::{MaximizerConfig, MaximizerResult, OrbitDistance, OrbitReference};
pub use evolve::{DiagnosticSeries, EvolutionState, PerturbKind, Solver};

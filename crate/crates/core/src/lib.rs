//! Doebner–Goldin nonlinear Schrodinger equations: parameter-space gauge
//! algebra, exact solutions, Gaussian moment dynamics and a 1D evolver.

pub mod catalog;
pub mod cli;
pub mod error;
pub mod evolver;
pub mod field;
pub mod gaussian;
pub mod io;
pub mod params;
pub mod potential;
pub mod quad;

pub use catalog::{AnalyticSolution, Family, Profile, SolutionSpec};
pub use error::{Error, Result};
pub use evolver::{evolve, EvolutionTrace, EvolverConfig};
pub use field::{
    ap_residual, ap_residual_general, functionals, nse_residual, push_gauge, Boundary, ComplexField,
    Functionals, Grid1D, ResidualReport, ThetaField,
};
pub use params::{GaugeElement, Invariants, NuMuParams, PhysicalParams};
pub use gaussian::{AsymptoticVerdict, GaussianState, PhaseCoefficients, VerdictKind};
pub use potential::Potential;

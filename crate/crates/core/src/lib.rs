//! Coarse-grained collective measurements on superpositions of Dicke states.
//!
//! The crate computes exact finite-N statistics of the rescaled intensity
//! `X = Σ_i (a_i - μ) / (τ N^α)`, the analytic limit laws at `α = 1/2`
//! (Gaussian-smeared oscillator densities) and `α = 1` (rotor densities),
//! the bipartite sign-binned CHSH correlations built from them, noise and
//! loss robustness, and a sequential Monte Carlo sampler.

pub mod bell;
pub mod error;
pub mod finite;
pub mod io;
pub mod limit;
pub mod noise;
pub mod numeric;
pub mod operator;
pub mod sampler;
pub mod selftest;

pub use error::{Error, Result};
pub use finite::{DickeSuperposition, LatticePmf, Moments};
pub use limit::{GridDensity, LimitState};
pub use operator::{AlphaMode, DerivedParams, Mat2, Povm};

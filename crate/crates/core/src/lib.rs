//! Randomized matrix-free quadrature for spectrum and spectral-sum approximation.
//!
//! The crate estimates the cumulative empirical spectral measure (CESM) of a real
//! symmetric operator, and spectral sums `tr(f(A))`, by averaging quadrature
//! approximations of weighted CESMs `Ψ(x) = vᵀ 1[A ≤ x] v` over random unit vectors.
//!
//! The pieces are:
//!
//! * [`tridiag`]: Jacobi matrices, their eigendecomposition and orthonormal polynomials.
//! * [`operators`]: matrix-free operators, sparse storage and Matrix Market input.
//! * [`orthopoly`]: reference measures, connection coefficients and the Stieltjes procedure.
//! * [`moments`]: Krylov moment extraction (three-term recurrence, Chebyshev, Lanczos).
//! * [`quadrature`]: Gaussian, interpolatory and approximation-based quadrature, damping.
//! * [`measures`]: distribution functions, Wasserstein distance and smoothing.
//! * [`estimator`]: the randomized driver, spectral sums, heat capacity and a priori bounds.
//! * [`problems`]: built-in test operators with known spectra.

pub mod config;
pub mod error;
pub mod estimator;
pub mod measures;
pub mod moments;
pub mod operators;
pub mod orthopoly;
pub mod problems;
pub mod quadrature;
pub mod report;
pub mod tridiag;

pub(crate) mod integrate;

pub use error::{Error, Result};
pub use estimator::{
    estimate_spectrum, spectral_sum, EstimateConfig, EstimateReport, FunctionSpec, IntervalPolicy,
    Method, MomentPath,
};
pub use measures::{Approximation, DiscreteDistribution, SeriesDistribution};
pub use moments::ModifiedMoments;
pub use operators::LinearOperator;
pub use orthopoly::ReferenceMeasure;
pub use tridiag::{JacobiMatrix, TridiagEigen};

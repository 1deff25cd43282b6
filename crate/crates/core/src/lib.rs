//! Pseudo-spectral toolkit for periodic stochastic Burgers / KPZ / heat
//! dynamics and their lattice discretizations.
//!
//! The crate is organized around a small set of ingredients:
//!
//! - [`grid`]: odd periodic lattices, the discrete Fourier transform with the
//!   `F u(k) = eps * sum_l u(x_l) exp(-i eps l k)` normalization, and the
//!   extension / periodization / cutoff operators that mediate between lattice
//!   fields and trigonometric polynomials.
//! - [`scheme`]: families of discretizations `(Delta_N, D_N, B_N)` described by
//!   finite signed measures with machine-checkable hypotheses, their Fourier
//!   symbols `(f, g, h)`, and named presets (naive, Sasamoto-Spohn).
//! - [`noise`]: reproducible counter-based space-time white noise in Fourier
//!   representation, spectral mollifiers, and stationary Ornstein-Uhlenbeck
//!   initial data.
//! - [`dynamics`]: exponential-Euler integration of the lattice Burgers / KPZ
//!   equations, Ito-Euler for the multiplicative heat equation, Cole-Hopf
//!   consistency checks, and Feynman-Kac Monte Carlo.
//! - [`besov`]: Littlewood-Paley blocks, Besov norms, Bony paraproducts,
//!   resonant products, commutators, and regularity-exponent regression.
//! - [`constants`]: deterministic quadrature of the computable constants
//!   (correction constant, renormalization constant, vertex-function bounds,
//!   zero-chaos sums, cancellation integrals).
//! - [`stats`]: the statistical tests used by the invariance experiments.
//! - [`ensemble`]: replica-parallel map helpers (rayon behind the `parallel`
//!   feature, sequential otherwise).

pub mod besov;
pub mod constants;
pub mod dynamics;
pub mod ensemble;
pub mod grid;
pub mod noise;
pub mod quad;
pub mod scheme;
pub mod stats;

pub use num_complex::Complex64;

/// Library version string embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

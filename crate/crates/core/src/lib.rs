//! Numerical toolkit for one-dimensional discrete Schrödinger operators with
//! potentials sampled along orbits of the m-fold circle map θ ↦ mθ mod 1.
//!
//! The operator on the half-line ℓ²(ℤ₊) is
//!
//!   [Hφ](n) = φ(n+1) + φ(n−1) + λ f(mⁿθ) φ(n),
//!
//! with coupling λ > 0 and a bounded sampling function f on the circle. The
//! crate works symbolically: θ is a base-m digit stream, the map is the digit
//! shift, and the whole-line extension draws digits from a two-sided fair
//! Bernoulli stream. On top of that sit transfer-matrix cocycles with
//! overflow-safe rescaling, Monte-Carlo Lyapunov-exponent estimation, finite
//! tridiagonal boxes with boundary conditions, a symmetric tridiagonal
//! eigensolver, eigenfunction localization diagnostics, and Floquet band
//! computation for periodic digit streams.
//!
//! Modules:
//! - [`symbolic`] — digit streams, the coding map D, exact m-adic arithmetic
//! - [`potential`] — sampling functions and the half-/whole-line potentials
//! - [`operator`] — finite tridiagonal boxes and the half-line restriction
//! - [`cocycle`] — transfer-matrix products and Lyapunov estimation
//! - [`spectral`] — eigensolver, decay/participation reports, Floquet bands

pub mod cocycle;
pub mod error;
pub mod operator;
pub mod potential;
pub mod spectral;
pub mod symbolic;

pub use error::{Error, Result};

//! Numerical laboratory for semiclassical asymptotics of Legendrian states
//! on model sphere bundles.
//!
//! The model space is the unit sphere X = S^{2n+1} ⊆ ℂ^{n+1}, viewed as the
//! circle bundle over projective space ℂPⁿ via the Hopf map, carrying the
//! contact form α = Im(ū·du).  Legendrian submanifolds Λ ⊆ X determine, at
//! each Szegő-kernel level k, a state u_k obtained by integrating the kernel
//! against a half-density on Λ.  This crate computes such states by direct
//! quadrature, builds the closed-form leading-term predictions for their
//! k → ∞ asymptotics (including torus-equivariant components and Hermitian
//! pairings of two states), and provides the symplectic linear algebra and
//! stationary-phase machinery the predictions are made of.
//!
//! Modules, bottom up:
//!
//! * [`tolerances`] — every numerical threshold used by the crate, with
//!   rationale.
//! * [`linalg`] — real/complex subspace arithmetic and the shared
//!   principal-branch det^{−1/2} routine.
//! * [`quadrature`] — periodic trapezoidal rules on tori and Gauss–Legendre
//!   rules on intervals.
//! * [`symplectic`] — Lagrangian subspaces, tangent decompositions, the R/T
//!   matrices, the Ξ density factor, the ι_J pair invariant, Gaussian
//!   Fourier integrals, and the quadratic forms S, P.
//! * [`geometry`] — the concrete model: bundle points, Heisenberg charts,
//!   torus actions, moment maps, orbit volumes and stabilizers.
//! * [`legendrian`] — parametrized Legendrian immersions, built-in families,
//!   return-element search and transversality checks.
//! * [`states`] — the explicit Szegő kernel, quadrature of u_k and its
//!   equivariant components, Hermitian pairings.
//! * [`asymptotics`] — leading-term predictors, a numerical stationary-phase
//!   oracle, power-law fitting and rapid-decay testing.

pub mod asymptotics;
pub mod geometry;
pub mod legendrian;
pub mod linalg;
pub mod quadrature;
pub mod states;
pub mod symplectic;
pub mod tolerances;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
/// Dynamically sized real vector.
pub type RVector = nalgebra::DVector<f64>;
/// Dynamically sized real matrix.
pub type RMatrix = nalgebra::DMatrix<f64>;
/// Dynamically sized complex vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dynamically sized complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);

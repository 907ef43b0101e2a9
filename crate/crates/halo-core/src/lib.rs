//! Halo-orbit bifurcation thresholds at the collinear libration points of the
//! spatial circular restricted three-body problem (CR3BP).
//!
//! The crate implements the full analytic pipeline:
//!
//! 1. [`cr3bp_model`] — collinear equilibria, scaled local expansion of the
//!    synodic Hamiltonian, and conversion back to physical (synodic) energy;
//! 2. [`poly_algebra`] — sparse complex polynomials in six phase-space
//!    variables with Poisson brackets and Lie transforms;
//! 3. [`linearization`] — saddle x centre x centre splitting of the quadratic
//!    part and the symplectic diagonalizing map;
//! 4. [`normal_form`] — resonant Birkhoff normal form around the 1:1
//!    bending/in-plane resonance, and its reduction to action-angle
//!    coefficients on the centre manifold;
//! 5. [`bifurcation`] — detuning-series thresholds for the halo and
//!    anti-halo (planar-critical and vertical-critical) families, Floquet
//!    cross-checks, and seed initial conditions;
//! 6. [`diagnostics`] — norm-growth diagnostics of the normal-form series.
//!
//! All quantities are expressed in the standard synodic rotating frame with
//! unit mass and unit distance between the primaries, or in the per-point
//! scaled local frames described in [`cr3bp_model`].

pub mod bifurcation;
pub mod cr3bp_model;
pub mod diagnostics;
pub mod linearization;
pub mod normal_form;
pub mod poly_algebra;

pub use cr3bp_model::{LibrationPoint, ProblemSpec};

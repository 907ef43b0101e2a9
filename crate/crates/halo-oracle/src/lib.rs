//! Numerical verification of the analytic bifurcation thresholds.
//!
//! This crate never touches the normal-form machinery: it integrates the
//! exact synodic equations of motion with a high-order adaptive Runge-Kutta
//! pair, closes planar Lyapunov orbits by differential correction on the
//! perpendicular-crossing condition, continues the family by pseudo-arclength
//! steps, and locates the halo bifurcation as the energy where the
//! out-of-plane monodromy trace crosses `+2`. Agreement with the series
//! thresholds is the end-to-end cross-validation of the whole pipeline.
//!
//! * [`integrator`] — embedded Fehlberg 7(8) stepper, adaptive driver,
//!   plane-crossing events, and the variational (state-transition) flow.
//! * [`family`] — linear seeding, differential correction, continuation,
//!   and the numerical threshold search.

pub mod family;
pub mod integrator;

pub use family::{
    correct_lyapunov, linear_seed, lyapunov_family, numerical_threshold, FamilyOptions,
    LyapunovFamilyPoint,
};
pub use integrator::{
    integrate, integrate_fixed_step, integrate_with_stm, synodic_state_energy,
    IntegratorConfig, OracleError,
};

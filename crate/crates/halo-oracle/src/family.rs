//! Planar Lyapunov family continuation and the numerical halo-bifurcation
//! threshold.
//!
//! Orbits are parametrized by their perpendicular crossing of the `Y = 0`
//! plane: the initial state is `(X0, 0, 0, 0, PY0, 0)` and the orbit is
//! periodic exactly when the next perpendicular crossing has `PX = 0`. A
//! one-parameter Newton corrector enforces that condition at fixed `X0`;
//! the family itself is traced with pseudo-arclength steps in `(X0, PY0)`
//! so folds cannot stall the continuation. The halo bifurcation is the
//! point where the vertical stability index `Φ33 + Φ66` of the monodromy
//! matrix crosses `+2`.

use halo_core::cr3bp_model::{
    self, EquilibriumGeometry, LibrationPoint, LocalState, SynodicState,
};
use halo_core::linearization::quadratic_data;
use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::integrator::{
    first_plane_crossing, integrate_with_stm, Crossing, IntegratorConfig, OracleError,
};

/// Upper bound on the half-period search when locating plane crossings.
const HALF_PERIOD_HORIZON: f64 = 50.0;

/// Residual target for the perpendicular-crossing condition `PX = 0`.
const CORRECTOR_TOL: f64 = 1e-11;

/// Maximum Newton iterations for both corrector variants.
const CORRECTOR_MAX_ITER: u32 = 25;

/// Componentwise closure tolerance for a corrected orbit over one period.
const CLOSURE_TOL: f64 = 1e-9;

/// One corrected member of the planar Lyapunov family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovFamilyPoint {
    /// Synodic (physical) energy of the orbit.
    pub energy: f64,
    /// Orbital period.
    pub period: f64,
    /// Position of the perpendicular plane crossing.
    pub x0: f64,
    /// Transverse velocity at the crossing.
    pub ydot0: f64,
    /// Vertical stability index `Φ33 + Φ66` of the monodromy matrix.
    pub stability_index: f64,
}

impl LyapunovFamilyPoint {
    /// Momentum conjugate to `Y` at the crossing.
    pub fn py0(&self) -> f64 {
        self.ydot0 + self.x0
    }
}

/// Controls for family continuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyOptions {
    /// Local-chart amplitude of the first (linear) seed orbit.
    pub seed_amplitude: f64,
    /// Initial pseudo-arclength step in `(X0, PY0)`.
    pub initial_arclength: f64,
    /// Largest allowed arclength step.
    pub max_arclength: f64,
    /// Smallest arclength step before the continuation gives up.
    pub min_arclength: f64,
    /// Upper bound on the number of corrected family members.
    pub max_points: usize,
    /// Stop once `|X0 - X_L|` exceeds this multiple of the libration-point
    /// distance γ (the local picture has degenerated by then).
    pub max_amplitude_factor: f64,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        Self {
            seed_amplitude: 1e-3,
            initial_arclength: 2e-3,
            max_arclength: 2e-2,
            min_arclength: 1e-8,
            max_points: 600,
            max_amplitude_factor: 0.9,
        }
    }
}

/// Initial conditions `(X0, Ydot0)` of a small planar orbit from the
/// linearized flow: `x = A cos ω_y t`, `y = -ŝ A sin ω_y t` with the
/// amplitude ratio `ŝ = (ω_y² + 1 + 2c₂) / (2 ω_y)`.
pub fn linear_seed(
    point: LibrationPoint,
    mu: f64,
    amplitude: f64,
) -> Result<(f64, f64), OracleError> {
    let geometry = cr3bp_model::equilibrium_geometry(point, mu)?;
    let coeffs = cr3bp_model::model_coefficients(point, mu, 4)?;
    let qd = quadratic_data(&coeffs)?;
    let s_hat = (qd.omega_y * qd.omega_y + 1.0 + 2.0 * qd.c2) / (2.0 * qd.omega_y);
    let local = LocalState {
        x: amplitude,
        py: amplitude * (1.0 - s_hat * qd.omega_y),
        ..Default::default()
    };
    let state = cr3bp_model::local_to_synodic(&geometry, &local);
    let [_, ydot, _] = state.velocity();
    Ok((state.x, ydot))
}

/// Perpendicular-crossing initial state for given `(X0, PY0)`.
fn crossing_state(x0: f64, py0: f64) -> SynodicState {
    SynodicState { x: x0, py: py0, ..Default::default() }
}

/// Half-period arc from a perpendicular crossing to the next plane
/// crossing, with the transition matrix.
fn half_arc(
    mu: f64,
    x0: f64,
    py0: f64,
    cfg: &IntegratorConfig,
) -> Result<Crossing, OracleError> {
    first_plane_crossing(mu, &crossing_state(x0, py0), cfg, HALF_PERIOD_HORIZON)
}

/// Sensitivities of the crossing residual `G = PX_f` with respect to `X0`
/// and `PY0`, accounting for the crossing-time variation.
fn crossing_gradient(mu: f64, arc: &Crossing) -> Result<(f64, f64), OracleError> {
    let dot = cr3bp_model::synodic_vector_field(mu, &arc.state)?;
    let ydot_f = arc.state.py - arc.state.x;
    let pxdot_f = dot.px;
    let g_x = arc.stm[(3, 0)] - pxdot_f * arc.stm[(1, 0)] / ydot_f;
    let g_py = arc.stm[(3, 4)] - pxdot_f * arc.stm[(1, 4)] / ydot_f;
    Ok((g_x, g_py))
}

/// Newton corrector at fixed `X0`: adjusts `PY0` until the half-period
/// crossing is perpendicular. Returns the corrected `PY0` and the arc.
fn correct_fixed_x0(
    mu: f64,
    x0: f64,
    py0_guess: f64,
    cfg: &IntegratorConfig,
) -> Result<(f64, Crossing), OracleError> {
    let mut py0 = py0_guess;
    let mut residual = f64::INFINITY;
    for _ in 0..CORRECTOR_MAX_ITER {
        let arc = half_arc(mu, x0, py0, cfg)?;
        residual = arc.state.px.abs();
        if residual <= CORRECTOR_TOL {
            return Ok((py0, arc));
        }
        let (_, g_py) = crossing_gradient(mu, &arc)?;
        py0 -= arc.state.px / g_py;
    }
    Err(OracleError::CorrectionDiverged { residual, iterations: CORRECTOR_MAX_ITER })
}

/// Full-period bookkeeping for a corrected orbit: closure check, monodromy
/// matrix, vertical stability index, and energy.
fn family_point(
    mu: f64,
    x0: f64,
    py0: f64,
    arc: &Crossing,
    cfg: &IntegratorConfig,
) -> Result<LyapunovFamilyPoint, OracleError> {
    let period = 2.0 * arc.t;
    let state0 = crossing_state(x0, py0);
    let (state_t, monodromy) = integrate_with_stm(mu, &state0, period, cfg)?;
    let closure = state_t
        .to_array()
        .iter()
        .zip(state0.to_array())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    if closure > CLOSURE_TOL {
        return Err(OracleError::OrbitNotClosed { residual: closure });
    }
    Ok(LyapunovFamilyPoint {
        energy: cr3bp_model::synodic_energy(mu, &state0)?,
        period,
        x0,
        ydot0: py0 - x0,
        stability_index: vertical_index(&monodromy),
    })
}

/// Vertical stability index of a monodromy matrix.
fn vertical_index(monodromy: &SMatrix<f64, 6, 6>) -> f64 {
    monodromy[(2, 2)] + monodromy[(5, 5)]
}

/// Corrects a seed `(X0, Ydot0)` into a closed planar orbit at fixed `X0`.
pub fn correct_lyapunov(
    mu: f64,
    x0: f64,
    ydot0_guess: f64,
    cfg: &IntegratorConfig,
) -> Result<LyapunovFamilyPoint, OracleError> {
    let (py0, arc) = correct_fixed_x0(mu, x0, ydot0_guess + x0, cfg)?;
    family_point(mu, x0, py0, &arc, cfg)
}

/// Bordered Newton corrector for a pseudo-arclength step: solves
/// `G(u) = 0` together with `(u - u_pred) · t̂ = 0` for `u = (X0, PY0)`.
fn correct_arclength(
    mu: f64,
    u_pred: [f64; 2],
    tangent: [f64; 2],
    cfg: &IntegratorConfig,
) -> Result<([f64; 2], Crossing), OracleError> {
    let mut u = u_pred;
    let mut residual = f64::INFINITY;
    for _ in 0..CORRECTOR_MAX_ITER {
        let arc = half_arc(mu, u[0], u[1], cfg)?;
        residual = arc.state.px.abs();
        if residual <= CORRECTOR_TOL {
            return Ok((u, arc));
        }
        let (g_x, g_py) = crossing_gradient(mu, &arc)?;
        let det = g_x * tangent[1] - g_py * tangent[0];
        if det.abs() < 1e-300 {
            break;
        }
        // The constraint row stays satisfied: updates are orthogonal to t̂.
        u[0] -= arc.state.px * tangent[1] / det;
        u[1] -= -arc.state.px * tangent[0] / det;
    }
    Err(OracleError::CorrectionDiverged { residual, iterations: CORRECTOR_MAX_ITER })
}

/// Traces the planar Lyapunov family outward from the linear regime.
///
/// Continuation stops as soon as the vertical stability index has crossed
/// `+2` between consecutive members (the halo bifurcation is bracketed),
/// or when the amplitude or point budget runs out. All corrected members
/// are returned in order of increasing amplitude.
pub fn lyapunov_family(
    point: LibrationPoint,
    mu: f64,
    cfg: &IntegratorConfig,
    opts: &FamilyOptions,
) -> Result<Vec<LyapunovFamilyPoint>, OracleError> {
    cfg.validate()?;
    let geometry = cr3bp_model::equilibrium_geometry(point, mu)?;
    let x_center = geometry.x_position();
    let amplitude_cap = opts.max_amplitude_factor * geometry.gamma;

    // Two corrected seeds fix the initial tangent direction.
    let mut points = Vec::new();
    let mut seed_us = [[0.0; 2]; 2];
    for (slot, factor) in [(0usize, 1.0), (1usize, 1.5)] {
        let (x0, ydot0) = linear_seed(point, mu, opts.seed_amplitude * factor)?;
        let (py0, arc) = correct_fixed_x0(mu, x0, ydot0 + x0, cfg)?;
        points.push(family_point(mu, x0, py0, &arc, cfg)?);
        seed_us[slot] = [x0, py0];
    }
    let mut u_prev = seed_us[0];
    let mut u_curr = seed_us[1];

    let mut ds = opts.initial_arclength;
    while points.len() < opts.max_points {
        let prev_index = points[points.len() - 2].stability_index;
        let curr_index = points[points.len() - 1].stability_index;
        if (prev_index - 2.0) * (curr_index - 2.0) <= 0.0 {
            break; // bifurcation bracketed
        }
        if (u_curr[0] - x_center).abs() > amplitude_cap {
            break;
        }

        let mut tangent = [u_curr[0] - u_prev[0], u_curr[1] - u_prev[1]];
        let norm = tangent[0].hypot(tangent[1]);
        tangent = [tangent[0] / norm, tangent[1] / norm];

        let mut stepped = false;
        while ds >= opts.min_arclength {
            let u_pred = [u_curr[0] + ds * tangent[0], u_curr[1] + ds * tangent[1]];
            match correct_arclength(mu, u_pred, tangent, cfg)
                .and_then(|(u, arc)| Ok((u, family_point(mu, u[0], u[1], &arc, cfg)?)))
            {
                Ok((u, pt)) => {
                    points.push(pt);
                    u_prev = u_curr;
                    u_curr = u;
                    ds = (ds * 1.3).min(opts.max_arclength);
                    stepped = true;
                    break;
                }
                Err(_) => ds *= 0.5,
            }
        }
        if !stepped {
            return Err(OracleError::ContinuationStalled { step: ds });
        }
    }
    Ok(points)
}

/// Physical energy at which the planar family changes vertical stability —
/// the numerical halo-bifurcation threshold.
///
/// The family is traced until the vertical stability index brackets `+2`,
/// then the crossing is resolved by a guarded secant iteration in `X0`
/// with the one-parameter corrector re-closing the orbit at every trial.
pub fn numerical_threshold(
    point: LibrationPoint,
    mu: f64,
    cfg: &IntegratorConfig,
    opts: &FamilyOptions,
) -> Result<f64, OracleError> {
    let points = lyapunov_family(point, mu, cfg, opts)?;
    let geometry = cr3bp_model::equilibrium_geometry(point, mu)?;
    let bracket = points
        .windows(2)
        .find(|w| (w[0].stability_index - 2.0) * (w[1].stability_index - 2.0) <= 0.0);
    let Some(&[a, b]) = bracket.map(|w| <&[LyapunovFamilyPoint; 2]>::try_from(w).unwrap())
    else {
        let lo = (points.first().map(|p| p.x0).unwrap_or_default()
            - geometry.x_position())
        .abs();
        let hi = (points.last().map(|p| p.x0).unwrap_or_default() - geometry.x_position())
            .abs();
        return Err(OracleError::NoCrossing { lo, hi });
    };
    refine_threshold(mu, a, b, cfg)
}

/// Secant iteration (with bisection fallback) on `X0` for the stability
/// index crossing `+2`, starting from a bracketing pair of family members.
fn refine_threshold(
    mu: f64,
    mut a: LyapunovFamilyPoint,
    mut b: LyapunovFamilyPoint,
    cfg: &IntegratorConfig,
) -> Result<f64, OracleError> {
    let eval = |x0: f64, py0_guess: f64| -> Result<LyapunovFamilyPoint, OracleError> {
        let (py0, arc) = correct_fixed_x0(mu, x0, py0_guess, cfg)?;
        family_point(mu, x0, py0, &arc, cfg)
    };
    let mut f_a = a.stability_index - 2.0;
    let mut f_b = b.stability_index - 2.0;
    for _ in 0..60 {
        if f_a.abs() <= 1e-9 {
            return Ok(a.energy);
        }
        if f_b.abs() <= 1e-9 {
            return Ok(b.energy);
        }
        if (b.x0 - a.x0).abs() < 1e-13 {
            break;
        }
        let mut x_new = if f_b != f_a {
            b.x0 - f_b * (b.x0 - a.x0) / (f_b - f_a)
        } else {
            0.5 * (a.x0 + b.x0)
        };
        let (lo, hi) = if a.x0 < b.x0 { (a.x0, b.x0) } else { (b.x0, a.x0) };
        if !(lo..=hi).contains(&x_new) {
            x_new = 0.5 * (lo + hi);
        }
        // Interpolate PY0 along the chord for the corrector guess.
        let frac = if b.x0 != a.x0 { (x_new - a.x0) / (b.x0 - a.x0) } else { 0.5 };
        let py0_guess = a.py0() + frac * (b.py0() - a.py0());
        let p_new = eval(x_new, py0_guess)?;
        let f_new = p_new.stability_index - 2.0;
        // Keep the sign change inside the bracket.
        if f_a * f_new <= 0.0 {
            b = p_new;
            f_b = f_new;
        } else {
            a = p_new;
            f_a = f_new;
        }
    }
    // The bracket collapsed in X0 before the index tolerance was met; the
    // endpoints agree to integration accuracy, so report the midpoint.
    if (b.x0 - a.x0).abs() < 1e-12 {
        return Ok(0.5 * (a.energy + b.energy));
    }
    Err(OracleError::CorrectionDiverged {
        residual: f_a.abs().min(f_b.abs()),
        iterations: 60,
    })
}

/// Geometry accessor shared with the command-line layer.
pub fn equilibrium(point: LibrationPoint, mu: f64) -> Result<EquilibriumGeometry, OracleError> {
    Ok(cr3bp_model::equilibrium_geometry(point, mu)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_on_the_crossing_plane() {
        let (x0, ydot0) = linear_seed(LibrationPoint::L1, 0.01215058, 1e-3).unwrap();
        // The seed sits on Y = 0 with a purely transverse velocity; its X
        // offset from the libration point is the scaled amplitude.
        let geometry = cr3bp_model::equilibrium_geometry(LibrationPoint::L1, 0.01215058).unwrap();
        assert!((x0 - geometry.x_position()).abs() < 2.0 * 1e-3 * geometry.gamma);
        assert!(ydot0.abs() > 0.0);
    }
}

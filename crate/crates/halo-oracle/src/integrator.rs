//! Adaptive Fehlberg 7(8) integration of the synodic equations of motion,
//! with optional simultaneous integration of the variational equations for
//! the state-transition matrix and Newton-refined plane-crossing events.

use halo_core::cr3bp_model::{self, ModelError, SynodicState};
use halo_core::linearization::LinearizationError;
use nalgebra::SMatrix;
use thiserror::Error;

/// Errors raised by numerical integration and the family machinery.
#[derive(Debug, Error)]
pub enum OracleError {
    /// Underlying model evaluation failed (collision singularity, bad μ).
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Linear data needed for seeding could not be produced.
    #[error(transparent)]
    Linearization(#[from] LinearizationError),
    /// Step-size control collapsed below the resolvable scale.
    #[error("step size underflow at t = {t:.6e} (h = {step:.3e})")]
    StepUnderflow {
        /// Integration time at which control failed.
        t: f64,
        /// Last attempted step.
        step: f64,
    },
    /// The step budget ran out before reaching the target time.
    #[error("integration exceeded {steps} steps at t = {t:.6e}")]
    MaxStepsExceeded {
        /// Integration time reached.
        t: f64,
        /// Step budget.
        steps: usize,
    },
    /// Configuration violates its invariants.
    #[error("invalid integrator configuration: {detail}")]
    InvalidConfig {
        /// Human-readable description of the violation.
        detail: String,
    },
    /// No plane crossing was found within the allotted time span.
    #[error("no Y = 0 crossing within t ≤ {t_max:.3e}")]
    CrossingNotFound {
        /// Search horizon.
        t_max: f64,
    },
    /// Differential correction did not reach its residual target.
    #[error("differential correction stalled at residual {residual:.3e} after {iterations} iterations")]
    CorrectionDiverged {
        /// Final perpendicular-crossing residual.
        residual: f64,
        /// Iterations spent.
        iterations: u32,
    },
    /// A corrected orbit failed the closure invariant.
    #[error("orbit closure residual {residual:.3e} exceeds tolerance")]
    OrbitNotClosed {
        /// Max-norm return defect over one period.
        residual: f64,
    },
    /// Family continuation could not proceed.
    #[error("continuation stalled (arclength step {step:.3e})")]
    ContinuationStalled {
        /// Arclength step at which progress stopped.
        step: f64,
    },
    /// The stability index never crossed the bifurcation value in range.
    #[error("no stability-index crossing within amplitude range ({lo:.3e}, {hi:.3e})")]
    NoCrossing {
        /// Amplitude range searched (synodic units from the libration point).
        lo: f64,
        /// Upper end of the searched range.
        hi: f64,
    },
}

/// Tolerances and step limits for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Relative tolerance per step.
    pub rel_tol: f64,
    /// Absolute tolerance per step.
    pub abs_tol: f64,
    /// Upper bound on the step size.
    pub max_step: f64,
    /// Order of the embedded pair (only the 7(8) pair is provided).
    pub order: u32,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-12, abs_tol: 1e-12, max_step: 0.5, order: 8 }
    }
}

impl IntegratorConfig {
    /// Checks tolerance positivity and the supported method order.
    pub fn validate(&self) -> Result<(), OracleError> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_step > 0.0) {
            return Err(OracleError::InvalidConfig {
                detail: format!(
                    "tolerances and max step must be positive (rel {}, abs {}, max_step {})",
                    self.rel_tol, self.abs_tol, self.max_step
                ),
            });
        }
        if self.order != 8 {
            return Err(OracleError::InvalidConfig {
                detail: format!("only the 7(8) embedded pair is implemented (order {})", self.order),
            });
        }
        Ok(())
    }
}

/// Number of stages of the Fehlberg 7(8) pair.
const STAGES: usize = 13;

/// Runge-Kutta matrix of the Fehlberg 7(8) pair (row `i` weights stages
/// `0..i`). Every row sums to the corresponding node, which the unit tests
/// verify against `NODES`.
#[rustfmt::skip]
const RK_A: [[f64; 12]; STAGES] = [
    [0.0; 12],
    [2.0 / 27.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 36.0, 1.0 / 12.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 24.0, 0.0, 1.0 / 8.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [5.0 / 12.0, 0.0, -25.0 / 16.0, 25.0 / 16.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 20.0, 0.0, 0.0, 1.0 / 4.0, 1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-25.0 / 108.0, 0.0, 0.0, 125.0 / 108.0, -65.0 / 27.0, 125.0 / 54.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [31.0 / 300.0, 0.0, 0.0, 0.0, 61.0 / 225.0, -2.0 / 9.0, 13.0 / 900.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.0, 0.0, 0.0, -53.0 / 6.0, 704.0 / 45.0, -107.0 / 9.0, 67.0 / 90.0, 3.0, 0.0, 0.0, 0.0, 0.0],
    [-91.0 / 108.0, 0.0, 0.0, 23.0 / 108.0, -976.0 / 135.0, 311.0 / 54.0, -19.0 / 60.0, 17.0 / 6.0, -1.0 / 12.0, 0.0, 0.0, 0.0],
    [2383.0 / 4100.0, 0.0, 0.0, -341.0 / 164.0, 4496.0 / 1025.0, -301.0 / 82.0, 2133.0 / 4100.0, 45.0 / 82.0, 45.0 / 164.0, 18.0 / 41.0, 0.0, 0.0],
    [3.0 / 205.0, 0.0, 0.0, 0.0, 0.0, -6.0 / 41.0, -3.0 / 205.0, -3.0 / 41.0, 3.0 / 41.0, 6.0 / 41.0, 0.0, 0.0],
    [-1777.0 / 4100.0, 0.0, 0.0, -341.0 / 164.0, 4496.0 / 1025.0, -289.0 / 82.0, 2193.0 / 4100.0, 51.0 / 82.0, 33.0 / 164.0, 12.0 / 41.0, 0.0, 1.0],
];

/// Stage nodes of the pair.
pub(crate) const NODES: [f64; STAGES] = [
    0.0,
    2.0 / 27.0,
    1.0 / 9.0,
    1.0 / 6.0,
    5.0 / 12.0,
    1.0 / 2.0,
    5.0 / 6.0,
    1.0 / 6.0,
    2.0 / 3.0,
    1.0 / 3.0,
    1.0,
    0.0,
    1.0,
];

/// Seventh-order solution weights.
const W7: [f64; STAGES] = [
    41.0 / 840.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    41.0 / 840.0,
    0.0,
    0.0,
];

/// Eighth-order solution weights (the propagated solution).
const W8: [f64; STAGES] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    0.0,
    41.0 / 840.0,
    41.0 / 840.0,
];

#[cfg(test)]
pub(crate) fn rk_matrix_row_sum(i: usize) -> f64 {
    RK_A[i].iter().sum()
}

/// Right-hand side of the six-dimensional synodic flow.
fn rhs_state(mu: f64, y: &[f64; 6]) -> Result<[f64; 6], OracleError> {
    let state = SynodicState::from_array(*y);
    let dot = cr3bp_model::synodic_vector_field(mu, &state)?;
    Ok(dot.to_array())
}

/// Right-hand side of the state plus its variational flow: the trailing 36
/// entries hold the state-transition matrix row-major, Φ[i][j] = y[6+6i+j].
fn rhs_with_stm(mu: f64, y: &[f64; 42]) -> Result<[f64; 42], OracleError> {
    let mut state6 = [0.0; 6];
    state6.copy_from_slice(&y[..6]);
    let dstate = rhs_state(mu, &state6)?;
    let hess = cr3bp_model::gravity_hessian(mu, [y[0], y[1], y[2]])?;

    // Jacobian of the synodic field.
    let mut a = [[0.0; 6]; 6];
    a[0][1] = 1.0;
    a[0][3] = 1.0;
    a[1][0] = -1.0;
    a[1][4] = 1.0;
    a[2][5] = 1.0;
    a[3][4] = 1.0;
    a[4][3] = -1.0;
    for (i, row) in hess.iter().enumerate() {
        for (j, &u_ij) in row.iter().enumerate() {
            a[3 + i][j] = -u_ij + a[3 + i][j];
        }
    }

    let mut out = [0.0; 42];
    out[..6].copy_from_slice(&dstate);
    for i in 0..6 {
        for j in 0..6 {
            let mut acc = 0.0;
            for (k, a_ik) in a[i].iter().enumerate() {
                acc += a_ik * y[6 + 6 * k + j];
            }
            out[6 + 6 * i + j] = acc;
        }
    }
    Ok(out)
}

/// One embedded step: returns the eighth-order solution and the embedded
/// error estimate (difference of the two solutions).
fn rk_step<const N: usize, F>(
    f: &F,
    t: f64,
    y: &[f64; N],
    h: f64,
) -> Result<([f64; N], [f64; N]), OracleError>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N], OracleError>,
{
    let mut k = [[0.0; N]; STAGES];
    k[0] = f(t, y)?;
    for s in 1..STAGES {
        let mut stage = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = RK_A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    stage[i] += h * a * kj[i];
                }
            }
        }
        k[s] = f(t + NODES[s] * h, &stage)?;
    }
    let mut y8 = *y;
    let mut err = [0.0; N];
    for (s, ks) in k.iter().enumerate() {
        let (w8, w7) = (W8[s], W7[s]);
        if w8 != 0.0 || w7 != 0.0 {
            for i in 0..N {
                y8[i] += h * w8 * ks[i];
                err[i] += h * (w8 - w7) * ks[i];
            }
        }
    }
    Ok((y8, err))
}

/// Hard cap on accepted plus rejected steps for a single integration call.
const MAX_STEPS: usize = 4_000_000;

/// Adaptive driver state.
struct Driver<'a, const N: usize, F>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N], OracleError>,
{
    f: &'a F,
    cfg: IntegratorConfig,
    t: f64,
    y: [f64; N],
    h: f64,
    steps: usize,
}

impl<'a, const N: usize, F> Driver<'a, N, F>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N], OracleError>,
{
    fn new(f: &'a F, cfg: IntegratorConfig, t0: f64, y0: [f64; N]) -> Self {
        let h = (cfg.max_step / 16.0).min(1e-3).max(1e-8);
        Self { f, cfg, t: t0, y: y0, h, steps: 0 }
    }

    /// Advances by one accepted step, never stepping past `t_limit`.
    fn step_to(&mut self, t_limit: f64) -> Result<(), OracleError> {
        loop {
            self.steps += 1;
            if self.steps > MAX_STEPS {
                return Err(OracleError::MaxStepsExceeded { t: self.t, steps: MAX_STEPS });
            }
            let remaining = t_limit - self.t;
            let h = self.h.min(self.cfg.max_step).min(remaining.max(0.0));
            if h < 1e-14 * self.t.abs().max(1.0) {
                return Err(OracleError::StepUnderflow { t: self.t, step: h });
            }
            let (y_new, err) = rk_step(self.f, self.t, &self.y, h)?;
            let mut ratio: f64 = 0.0;
            for i in 0..N {
                let scale =
                    self.cfg.abs_tol + self.cfg.rel_tol * self.y[i].abs().max(y_new[i].abs());
                ratio = ratio.max(err[i].abs() / scale);
            }
            let factor = if ratio > 0.0 {
                (0.9 * ratio.powf(-1.0 / 8.0)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            if ratio <= 1.0 {
                self.t += h;
                self.y = y_new;
                self.h = (h * factor).min(self.cfg.max_step);
                return Ok(());
            }
            self.h = h * factor;
        }
    }

    /// Integrates to exactly `t_end`.
    fn run_to(&mut self, t_end: f64) -> Result<(), OracleError> {
        while self.t < t_end - 1e-15 * t_end.abs().max(1.0) {
            self.step_to(t_end)?;
        }
        Ok(())
    }
}

/// Integrates the synodic state for `t` time units (t ≥ 0).
pub fn integrate(
    mu: f64,
    state: &SynodicState,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<SynodicState, OracleError> {
    cfg.validate()?;
    let f = |_t: f64, y: &[f64; 6]| rhs_state(mu, y);
    let mut d = Driver::new(&f, *cfg, 0.0, state.to_array());
    d.run_to(t)?;
    Ok(SynodicState::from_array(d.y))
}

/// Integrates the synodic state over `t` with `n` equal steps of the
/// eighth-order solution and no error control. Intended for order-of-
/// convergence diagnostics, where the step size must be prescribed.
pub fn integrate_fixed_step(
    mu: f64,
    state: &SynodicState,
    t: f64,
    n: usize,
) -> Result<SynodicState, OracleError> {
    if n == 0 {
        return Err(OracleError::InvalidConfig { detail: "need at least one step".into() });
    }
    let f = |_t: f64, y: &[f64; 6]| rhs_state(mu, y);
    let h = t / n as f64;
    let mut y = state.to_array();
    for i in 0..n {
        let (y_new, _) = rk_step(&f, i as f64 * h, &y, h)?;
        y = y_new;
    }
    Ok(SynodicState::from_array(y))
}

/// Integrates state and state-transition matrix for `t` time units.
pub fn integrate_with_stm(
    mu: f64,
    state: &SynodicState,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<(SynodicState, SMatrix<f64, 6, 6>), OracleError> {
    cfg.validate()?;
    let f = |_t: f64, y: &[f64; 42]| rhs_with_stm(mu, y);
    let mut d = Driver::new(&f, *cfg, 0.0, augmented(state));
    d.run_to(t)?;
    Ok(split_augmented(&d.y))
}

/// Packs a state with the identity transition matrix.
fn augmented(state: &SynodicState) -> [f64; 42] {
    let mut y = [0.0; 42];
    y[..6].copy_from_slice(&state.to_array());
    for i in 0..6 {
        y[6 + 6 * i + i] = 1.0;
    }
    y
}

/// Splits an augmented vector back into state and transition matrix.
fn split_augmented(y: &[f64; 42]) -> (SynodicState, SMatrix<f64, 6, 6>) {
    let mut state6 = [0.0; 6];
    state6.copy_from_slice(&y[..6]);
    let stm = SMatrix::<f64, 6, 6>::from_fn(|i, j| y[6 + 6 * i + j]);
    (SynodicState::from_array(state6), stm)
}

/// Result of a refined `Y = 0` crossing of the augmented flow.
pub(crate) struct Crossing {
    /// Crossing time.
    pub t: f64,
    /// State at the crossing.
    pub state: SynodicState,
    /// State-transition matrix from the initial state to the crossing.
    pub stm: SMatrix<f64, 6, 6>,
}

/// Integrates until the first `Y = 0` crossing after leaving the plane and
/// refines the crossing time by Newton iteration on re-integrated short
/// arcs. The step is capped so no full plane excursion can hide inside a
/// single step.
pub(crate) fn first_plane_crossing(
    mu: f64,
    state: &SynodicState,
    cfg: &IntegratorConfig,
    t_max: f64,
) -> Result<Crossing, OracleError> {
    cfg.validate()?;
    let mut local_cfg = *cfg;
    local_cfg.max_step = cfg.max_step.min(0.1);
    let f = |_t: f64, y: &[f64; 42]| rhs_with_stm(mu, y);
    let mut d = Driver::new(&f, local_cfg, 0.0, augmented(state));
    loop {
        let (t_prev, y_prev) = (d.t, d.y);
        d.step_to(t_max)?;
        if y_prev[1] != 0.0 && y_prev[1] * d.y[1] <= 0.0 {
            return refine_crossing(mu, &local_cfg, t_prev, &y_prev, d.t);
        }
        if d.t >= t_max - 1e-12 {
            return Err(OracleError::CrossingNotFound { t_max });
        }
    }
}

/// Newton refinement of the crossing inside a bracketing step
/// `[t_lo, t_hi]`, re-integrating the stored pre-crossing state.
fn refine_crossing(
    mu: f64,
    cfg: &IntegratorConfig,
    t_lo: f64,
    y_lo: &[f64; 42],
    t_hi: f64,
) -> Result<Crossing, OracleError> {
    let f = |_t: f64, y: &[f64; 42]| rhs_with_stm(mu, y);
    let y_at = |tau: f64| -> Result<[f64; 42], OracleError> {
        if tau <= t_lo {
            return Ok(*y_lo);
        }
        let mut d = Driver::new(&f, *cfg, t_lo, *y_lo);
        d.run_to(tau)?;
        Ok(d.y)
    };
    // Secant initial guess inside the bracket.
    let y_hi = y_at(t_hi)?;
    let (a, b) = (y_lo[1], y_hi[1]);
    let mut tau = if a == b { 0.5 * (t_lo + t_hi) } else { t_lo + (t_hi - t_lo) * a / (a - b) };
    let mut y = y_at(tau)?;
    for _ in 0..16 {
        let ydot = y[4] - y[0]; // Ẏ = PY − X
        if ydot == 0.0 {
            break;
        }
        let mut next = tau - y[1] / ydot;
        if !(t_lo..=t_hi).contains(&next) {
            // Bisect against whichever end brackets the root.
            next = if (a > 0.0) == (y[1] > 0.0) {
                0.5 * (tau + t_hi)
            } else {
                0.5 * (t_lo + tau)
            };
        }
        tau = next;
        y = y_at(tau)?;
        if y[1].abs() <= 1e-13 * y[0].abs().max(1.0) {
            break;
        }
    }
    let residual = y[1].abs();
    if residual > 1e-11 * y[0].abs().max(1.0) {
        return Err(OracleError::CorrectionDiverged { residual, iterations: 16 });
    }
    let (state, stm) = split_augmented(&y);
    Ok(Crossing { t: tau, state, stm })
}

/// Synodic energy of a state (thin wrapper so oracle tests need no second
/// import path).
pub fn synodic_state_energy(mu: f64, state: &SynodicState) -> Result<f64, OracleError> {
    Ok(cr3bp_model::synodic_energy(mu, state)?)
}

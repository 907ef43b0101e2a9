//! Bifurcation thresholds of the halo and anti-halo families from the
//! centre-manifold normal form.
//!
//! On the centre manifold the normal form depends on the angles only through
//! `psi = theta_y - theta_z`. In the resonant variables
//! `(E, R) = (I_y + I_z, I_y)` the reduced one-degree-of-freedom system has
//! relative equilibria on the axial branches `R = E` (purely in-plane) and
//! `R = 0` (purely vertical), at the phases `psi = +-pi/2` (halo-type
//! "loop" equilibria) and `psi = 0, pi` (anti-halo "inclined" equilibria).
//! Each family detaches from its axial branch where the derivative of the
//! reduced Hamiltonian across the branch vanishes:
//!
//! ```text
//! F(E) = delta + sum_{n >= 2} f_n E^{n-1} = 0 ,
//! ```
//!
//! an equation solved here as a formal power series `E(delta)` by Newton
//! iteration in the ring of truncated series. Composing with the on-branch
//! energy expansion gives the physical bifurcation energy as a polynomial in
//! the detuning, the "threshold series" that is the crate's main output.
//!
//! An independent route to the same first-order thresholds goes through the
//! Floquet exponents of the linearized reduced flow around each axial
//! branch; [`floquet_thresholds`] locates the zeros of the Floquet
//! determinant numerically and must agree with the series route to roundoff.

use crate::cr3bp_model::{self, EquilibriumGeometry, LibrationPoint};
use crate::normal_form::{CmCoefficients, NormalFormResult};
use crate::poly_algebra::{lie_transform_poly, Chart, PolyError, SparsePolynomial};
use nalgebra::SMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by the bifurcation analysis.
#[derive(Debug, Error)]
pub enum BifurcationError {
    /// Requested series order exceeds what the normal form provides.
    #[error("threshold order {requested} exceeds the normal-form order {available}")]
    OrderExceedsData {
        /// Requested series order.
        requested: u32,
        /// Available normal-form order.
        available: u32,
    },
    /// The first-order denominator (or Floquet quadratic) is degenerate.
    #[error("degenerate resonance for {kind:?}: denominator {denominator:.3e} too small")]
    DegenerateResonance {
        /// Threshold family.
        kind: ThresholdKind,
        /// Offending denominator value.
        denominator: f64,
    },
    /// The detuning was not positive (never the case for collinear points).
    #[error("detuning delta = {delta:.3e} is not positive")]
    DetuningNotPositive {
        /// Offending detuning.
        delta: f64,
    },
    /// Polynomial-algebra failure while transforming coordinates.
    #[error(transparent)]
    Poly(#[from] PolyError),
    /// The phase solve for the seed crossing did not converge.
    #[error("seed phase iteration did not converge (residual {residual:.3e})")]
    SeedNotConverged {
        /// Final residual of the crossing condition.
        residual: f64,
    },
}

/// The four families bifurcating from the axial branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThresholdKind {
    /// Halo family from the planar Lyapunov branch (`psi = +-pi/2`).
    HaloY,
    /// Anti-halo (inclined) family from the planar branch (`psi = 0, pi`).
    AntihaloY,
    /// Halo-type family from the vertical branch (`psi = +-pi/2`).
    HaloZ,
    /// Anti-halo family from the vertical branch (`psi = 0, pi`).
    AntihaloZ,
}

impl ThresholdKind {
    /// Short label used in reports (`ly`, `iy`, `lz`, `iz`).
    pub fn label(&self) -> &'static str {
        match self {
            Self::HaloY => "ly",
            Self::AntihaloY => "iy",
            Self::HaloZ => "lz",
            Self::AntihaloZ => "iz",
        }
    }
}

impl std::fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Guard under which a first-order denominator counts as degenerate.
const DENOMINATOR_GUARD: f64 = 1e-12;

/// Relative floor for the curvature of the Floquet-determinant fit.
///
/// The determinant inherits the square of the quartic-coefficient scale,
/// and at the collinear point on the far side those coefficients vanish
/// linearly in the mass ratio, so a healthy curvature can be arbitrarily
/// small in absolute terms. Degeneracy is therefore judged against the
/// sampled determinant magnitudes: anything below this fraction of the
/// data scale is indistinguishable from a linear determinant.
const FIT_CURVATURE_GUARD: f64 = 1e-9;

/// A bifurcation threshold expanded in powers of the detuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSeries {
    /// Family this threshold belongs to.
    pub kind: ThresholdKind,
    /// Series order `N` (powers of the detuning kept).
    pub order: u32,
    /// Detuning value the series was evaluated at.
    pub delta: f64,
    /// Action series coefficients: `E_cal(delta) = sum_k c[k-1] delta^k`.
    pub c: Vec<f64>,
    /// On-branch energy coefficients `a_n` of `E = sum_n a_n E_cal^n`
    /// (`a[0]` includes the detuning part of the branch frequency).
    pub a: Vec<f64>,
    /// Energy series coefficients: `E_N = sum_k c_hat[k-1] delta^k`.
    pub c_hat: Vec<f64>,
    /// Critical total action at this order.
    pub e_cal: f64,
    /// Critical centre-manifold (local) energy at this order.
    pub e_local: f64,
    /// Critical physical synodic energy at this order.
    pub e_phys: f64,
}

/// Existence-condition coefficients `f_n` for one family: the across-branch
/// derivative of the reduced Hamiltonian is `delta + sum_{n>=2} f_n E^{n-1}`.
fn existence_coefficients(cm: &CmCoefficients, kind: ThresholdKind, max_n: u32) -> Vec<f64> {
    let mut f = Vec::with_capacity(max_n as usize);
    for n in 2..=max_n {
        let n8 = n as u8;
        let nf = f64::from(n);
        let value = match kind {
            // d/dR at R = E: only I_z-free and I_z-linear table entries
            // survive; cos(2 psi) = -1 on the halo phases, +1 on anti-halo.
            ThresholdKind::HaloY => {
                nf * cm.coefficient(n8, 0, 0) - cm.coefficient(n8 - 1, 1, 0)
                    + cm.coefficient(n8 - 1, 1, 1)
            }
            ThresholdKind::AntihaloY => {
                nf * cm.coefficient(n8, 0, 0)
                    - cm.coefficient(n8 - 1, 1, 0)
                    - cm.coefficient(n8 - 1, 1, 1)
            }
            // d/dR at R = 0, with the opposite overall sign so that the
            // equation keeps the form delta + sum f_n E^{n-1} = 0.
            ThresholdKind::HaloZ => {
                cm.coefficient(1, n8 - 1, 0) - cm.coefficient(1, n8 - 1, 1)
                    - nf * cm.coefficient(0, n8, 0)
            }
            ThresholdKind::AntihaloZ => {
                cm.coefficient(1, n8 - 1, 0) + cm.coefficient(1, n8 - 1, 1)
                    - nf * cm.coefficient(0, n8, 0)
            }
        };
        f.push(value);
    }
    f
}

/// Truncated power series in the detuning, index = power (constant first).
#[derive(Debug, Clone)]
struct DeltaSeries(Vec<f64>);

impl DeltaSeries {
    fn zero(n: usize) -> Self {
        Self(vec![0.0; n + 1])
    }

    fn mul(&self, other: &Self) -> Self {
        let n = self.0.len() - 1;
        let mut out = Self::zero(n);
        for (i, &a) in self.0.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.0.iter().enumerate() {
                if i + j <= n {
                    out.0[i + j] += a * b;
                } else {
                    break;
                }
            }
        }
        out
    }

    fn add_scaled(&mut self, other: &Self, k: f64) {
        for (a, &b) in self.0.iter_mut().zip(&other.0) {
            *a += k * b;
        }
    }

    /// Series division; the divisor must have a nonzero constant term.
    fn div(&self, den: &Self) -> Self {
        let n = self.0.len() - 1;
        let mut out = Self::zero(n);
        for k in 0..=n {
            let mut acc = self.0[k];
            for j in 0..k {
                acc -= out.0[j] * den.0[k - j];
            }
            out.0[k] = acc / den.0[0];
        }
        out
    }
}

/// Solves `delta + sum_{n>=2} f[n-2] E^{n-1} = 0` for `E(delta)` as a
/// truncated power series (formal Newton iteration on truncated series).
/// Returns the coefficients of `delta^1 ..= delta^order`.
fn solve_action_series(f: &[f64], order: u32) -> Vec<f64> {
    let n = order as usize;
    let f2 = f[0];
    let mut s = DeltaSeries::zero(n);
    if n >= 1 {
        s.0[1] = -1.0 / f2;
    }
    // Newton in the ring of truncated series doubles the valuation of the
    // error each step; a fixed small iteration count covers order <= 64.
    for _ in 0..8 {
        // value = delta + sum f_k s^{k-1}, derivative = sum (k-1) f_k s^{k-2}
        let mut value = DeltaSeries::zero(n);
        if n >= 1 {
            value.0[1] = 1.0; // the bare delta term
        }
        let mut derivative = DeltaSeries::zero(n);
        let mut s_pow = DeltaSeries::zero(n);
        s_pow.0[0] = 1.0; // s^0
        for (idx, &fk) in f.iter().enumerate() {
            // f[idx] multiplies E^(idx+1) in the equation.
            let power = idx + 1;
            let term = s_pow.mul(&s);
            derivative.add_scaled(&s_pow, fk * power as f64);
            value.add_scaled(&term, fk);
            s_pow = term;
        }
        let correction = value.div(&derivative);
        for k in 0..=n {
            s.0[k] -= correction.0[k];
        }
        s.0[0] = 0.0;
    }
    s.0[1..=n].to_vec()
}

/// On-branch energy coefficients: `a[0]` is the branch frequency including
/// detuning, `a[k]`, `k >= 1`, the action-power coefficients from the table.
fn branch_energy_coefficients(cm: &CmCoefficients, kind: ThresholdKind, max_n: u32) -> Vec<f64> {
    let mut a = Vec::with_capacity(max_n as usize);
    match kind {
        ThresholdKind::HaloY | ThresholdKind::AntihaloY => {
            a.push(cm.omega_z + cm.delta); // = omega_y
            for k in 2..=max_n {
                a.push(cm.coefficient(k as u8, 0, 0));
            }
        }
        ThresholdKind::HaloZ | ThresholdKind::AntihaloZ => {
            a.push(cm.omega_z);
            for k in 2..=max_n {
                a.push(cm.coefficient(0, k as u8, 0));
            }
        }
    }
    a
}

/// Computes the threshold series of one family at the given order.
///
/// The composite energy series treats the detuning part of the branch
/// frequency as first-order small: for the planar branches the energy is
/// `omega_z E_cal + delta E_cal + sum_{n>=2} c_n00 E_cal^n`, re-expanded in
/// powers of the detuning before truncation.
pub fn threshold_series(
    cm: &CmCoefficients,
    geometry: &EquilibriumGeometry,
    kind: ThresholdKind,
    order: u32,
) -> Result<ThresholdSeries, BifurcationError> {
    if order < 1 || order > cm.order {
        return Err(BifurcationError::OrderExceedsData { requested: order, available: cm.order });
    }
    let delta = cm.delta;
    if delta <= 0.0 {
        return Err(BifurcationError::DetuningNotPositive { delta });
    }
    let f = existence_coefficients(cm, kind, order + 1);
    if f[0].abs() < DENOMINATOR_GUARD {
        return Err(BifurcationError::DegenerateResonance { kind, denominator: f[0] });
    }
    let c = solve_action_series(&f, order);

    let n = order as usize;
    let mut s = DeltaSeries::zero(n);
    s.0[1..=n].copy_from_slice(&c);

    // Composite energy series in powers of delta.
    let a = branch_energy_coefficients(cm, kind, order);
    let planar = matches!(kind, ThresholdKind::HaloY | ThresholdKind::AntihaloY);
    let mut energy = DeltaSeries::zero(n);
    energy.add_scaled(&s, cm.omega_z);
    if planar {
        // The detuning part of the branch frequency: delta * E_cal(delta).
        for k in (1..=n).rev() {
            energy.0[k] += s.0[k - 1];
        }
    }
    let mut s_pow = s.mul(&s);
    for (idx, &an) in a.iter().enumerate().skip(1) {
        // a[idx] multiplies E_cal^(idx + 1).
        energy.add_scaled(&s_pow, an);
        if idx + 1 < a.len() {
            s_pow = s_pow.mul(&s);
        }
    }
    let c_hat = energy.0[1..=n].to_vec();

    let x = delta.abs();
    let horner = |coeffs: &[f64]| -> f64 {
        let mut acc = 0.0;
        for &ck in coeffs.iter().rev() {
            acc = acc * x + ck;
        }
        acc * x
    };
    let e_cal = horner(&c);
    let e_local = horner(&c_hat);
    let e_phys = cr3bp_model::to_physical_energy(geometry, e_local);
    Ok(ThresholdSeries { kind, order, delta, c, a, c_hat, e_cal, e_local, e_phys })
}

/// First-order thresholds of all four families, ordered `ly, iy, lz, iz`.
pub fn first_order_thresholds(
    cm: &CmCoefficients,
    geometry: &EquilibriumGeometry,
) -> Result<[ThresholdSeries; 4], BifurcationError> {
    Ok([
        threshold_series(cm, geometry, ThresholdKind::HaloY, 1)?,
        threshold_series(cm, geometry, ThresholdKind::AntihaloY, 1)?,
        threshold_series(cm, geometry, ThresholdKind::HaloZ, 1)?,
        threshold_series(cm, geometry, ThresholdKind::AntihaloZ, 1)?,
    ])
}

/// Energy on an axial branch at total action `action`, using every
/// on-branch coefficient the table provides.
pub fn energy_on_mode(cm: &CmCoefficients, kind: ThresholdKind, action: f64) -> f64 {
    let a = branch_energy_coefficients(cm, kind, cm.order + 1);
    let mut acc = 0.0;
    for &an in a.iter().rev() {
        acc = acc * action + an;
    }
    acc * action
}

/// Quartic-level coefficients of the reduced one-degree-of-freedom
/// Hamiltonian `K = omega_z E + delta R + a R^2 + b E^2 + c E R +
/// d (R^2 - E R) cos 2 psi` in the resonant variables `(E, R, nu, psi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedCoeffs {
    /// Coefficient of `R^2`.
    pub a: f64,
    /// Coefficient of `E^2`.
    pub b: f64,
    /// Coefficient of `E R`.
    pub c: f64,
    /// Coefficient of `(R^2 - E R) cos 2 psi`.
    pub d: f64,
    /// Vertical frequency (coefficient of `E`).
    pub omega_z: f64,
    /// Detuning (coefficient of `R`).
    pub delta: f64,
}

impl ReducedCoeffs {
    /// Derives the reduced coefficients from the quartic table entries.
    pub fn from_cm(cm: &CmCoefficients) -> Self {
        Self {
            a: cm.alpha + cm.beta - cm.sigma,
            b: cm.beta,
            c: cm.sigma - 2.0 * cm.beta,
            d: -2.0 * cm.tau,
            omega_z: cm.omega_z,
            delta: cm.delta,
        }
    }

    /// Value of the reduced Hamiltonian.
    pub fn hamiltonian(&self, e: f64, r: f64, psi: f64) -> f64 {
        self.omega_z * e
            + self.delta * r
            + self.a * r * r
            + self.b * e * e
            + self.c * e * r
            + self.d * (r * r - e * r) * (2.0 * psi).cos()
    }

    /// Right-hand sides `(R_dot, psi_dot, nu_dot)` of the reduced flow at
    /// fixed `E` (which is a first integral: `E_dot = 0` identically).
    pub fn vector_field(&self, e: f64, r: f64, psi: f64) -> [f64; 3] {
        let cos2 = (2.0 * psi).cos();
        let sin2 = (2.0 * psi).sin();
        let r_dot = 2.0 * self.d * r * (r - e) * sin2;
        let psi_dot = self.delta + 2.0 * self.a * r + self.c * e + self.d * (2.0 * r - e) * cos2;
        let nu_dot = self.omega_z + 2.0 * self.b * e + self.c * r - self.d * r * cos2;
        [r_dot, psi_dot, nu_dot]
    }
}

/// Full action-angle vector field `(I_y_dot, I_z_dot, theta_y_dot,
/// theta_z_dot)` of the centre-manifold normal form, from the complete
/// coefficient table.
pub fn action_angle_vector_field(cm: &CmCoefficients, state: [f64; 4]) -> [f64; 4] {
    let [iy, iz, ty, tz] = state;
    let psi = ty - tz;
    let mut out = [0.0; 4];
    for t in &cm.table {
        let (a, b, m) = (f64::from(t.iy), f64::from(t.iz), f64::from(t.m));
        let pow_y = iy.powf(a);
        let pow_z = iz.powf(b);
        let ang = 2.0 * m * psi;
        let cosv = ang.cos();
        let sinv = ang.sin();
        // I_dot = -dK/dtheta ; theta_dot = +dK/dI
        if m != 0.0 {
            let torque = t.value * pow_y * pow_z * 2.0 * m * sinv;
            out[0] += torque;
            out[1] -= torque;
        }
        if t.iy > 0 {
            out[2] += t.value * a * iy.powf(a - 1.0) * pow_z * cosv;
        }
        if t.iz > 0 {
            out[3] += t.value * pow_y * b * iz.powf(b - 1.0) * cosv;
        }
    }
    out
}

/// Which axial branch a Floquet analysis is linearized around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FloquetBranch {
    /// Planar Lyapunov branch (`I_z = 0`).
    Horizontal,
    /// Vertical Lyapunov branch (`I_y = 0`).
    Vertical,
}

/// Floquet data of an axial branch orbit at a given total action.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetData {
    /// Linearized transverse flow matrix (constant in the co-rotating
    /// angle variable).
    pub matrix: SMatrix<Complex64, 2, 2>,
    /// Floquet exponent (real on the unstable side, imaginary on the
    /// stable side).
    pub lambda: Complex64,
    /// Trace of the monodromy matrix over one branch period.
    pub monodromy_trace: f64,
    /// First-order frequency of the branch orbit.
    pub kappa: f64,
}

/// Entries `(A, B)` of the transverse Floquet matrix for one branch:
/// the matrix is `-i [[A, B], [-B, -A]]` (horizontal) or
/// `i [[A, -B], [B, -A]]` (vertical), both with `lambda^2 = B^2 - A^2`.
fn floquet_entries(cm: &CmCoefficients, branch: FloquetBranch, action: f64) -> (f64, f64) {
    match branch {
        FloquetBranch::Horizontal => (
            cm.delta + (2.0 * cm.alpha - cm.sigma) * action,
            2.0 * cm.tau * action,
        ),
        FloquetBranch::Vertical => (
            cm.delta - (2.0 * cm.beta - cm.sigma) * action,
            2.0 * cm.tau * action,
        ),
    }
}

/// Builds the Floquet data of an axial branch at total action `action`.
pub fn floquet_data(cm: &CmCoefficients, branch: FloquetBranch, action: f64) -> FloquetData {
    let (a, b) = floquet_entries(cm, branch, action);
    let matrix = match branch {
        FloquetBranch::Horizontal => {
            let mi = Complex64::new(0.0, -1.0);
            SMatrix::<Complex64, 2, 2>::new(
                mi * Complex64::new(a, 0.0),
                mi * Complex64::new(b, 0.0),
                mi * Complex64::new(-b, 0.0),
                mi * Complex64::new(-a, 0.0),
            )
        }
        FloquetBranch::Vertical => {
            let i = Complex64::I;
            SMatrix::<Complex64, 2, 2>::new(
                i * Complex64::new(a, 0.0),
                i * Complex64::new(-b, 0.0),
                i * Complex64::new(b, 0.0),
                i * Complex64::new(-a, 0.0),
            )
        }
    };
    let lambda = Complex64::new(b * b - a * a, 0.0).sqrt();
    let kappa = match branch {
        FloquetBranch::Horizontal => cm.omega_y + 2.0 * cm.alpha * action,
        FloquetBranch::Vertical => cm.omega_z + 2.0 * cm.beta * action,
    };
    let period = 2.0 * std::f64::consts::PI / kappa;
    let trace = 2.0 * (lambda * period).cosh();
    debug_assert!(trace.im.abs() < 1e-9, "monodromy trace should be real");
    FloquetData { matrix, lambda, monodromy_trace: trace.re, kappa }
}

/// First-order critical actions of all four families, found from the zeros
/// of the Floquet determinants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetQuartet {
    /// Halo (planar-branch, `psi = +-pi/2`) critical action.
    pub ly: f64,
    /// Anti-halo planar-branch critical action.
    pub iy: f64,
    /// Halo-type vertical-branch critical action.
    pub lz: f64,
    /// Anti-halo vertical-branch critical action.
    pub iz: f64,
}

/// Locates the zeros of the Floquet determinant of each axial branch.
///
/// The determinant `det F(E) = A(E)^2 - B(E)^2` is sampled at three actions,
/// interpolated by an exact quadratic, and solved with the numerically
/// stable quadratic formula; the two roots are attributed to the halo or
/// anti-halo family according to which linear factor (`A + B` or `A - B`)
/// vanishes there. This route never consults the series expansion, so it
/// cross-validates [`first_order_thresholds`].
pub fn floquet_thresholds(cm: &CmCoefficients) -> Result<FloquetQuartet, BifurcationError> {
    let scale = cm.delta.abs().max(1e-6)
        / ((2.0 * cm.alpha - cm.sigma).abs() + 2.0 * cm.tau.abs()).max(1e-6);
    let solve = |branch: FloquetBranch,
                 halo_kind: ThresholdKind,
                 anti_kind: ThresholdKind|
     -> Result<(f64, f64), BifurcationError> {
        // `(A - B)(A + B)` rather than `A^2 - B^2`: near a root one factor
        // is tiny and the product form keeps its relative accuracy.
        let det = |e: f64| {
            let (a, b) = floquet_entries(cm, branch, e);
            (a - b) * (a + b)
        };
        let h = scale;
        let (g0, g1, g2) = (det(0.0), det(h), det(2.0 * h));
        // Exact quadratic through the three samples.
        let qa = (g2 - 2.0 * g1 + g0) / (2.0 * h * h);
        let qb = (-g2 + 4.0 * g1 - 3.0 * g0) / (2.0 * h);
        let qc = g0;
        let det_scale = g0.abs().max(g1.abs()).max(g2.abs()) / (h * h);
        if det_scale == 0.0 || qa.abs() < det_scale * FIT_CURVATURE_GUARD {
            return Err(BifurcationError::DegenerateResonance {
                kind: halo_kind,
                denominator: qa,
            });
        }
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return Err(BifurcationError::DegenerateResonance {
                kind: halo_kind,
                denominator: disc,
            });
        }
        let q = -0.5 * (qb + qb.signum() * disc.sqrt());
        // Newton-polish each root against the directly sampled determinant;
        // the quadratic fit brackets, the polish removes its conditioning
        // error. The slopes of the (linear) entries come from the same
        // samples, so the route still never consults the series formulas.
        let (a0, b0) = floquet_entries(cm, branch, 0.0);
        let (ah, bh) = floquet_entries(cm, branch, h);
        let (da, db) = ((ah - a0) / h, (bh - b0) / h);
        let polish = |mut r: f64| {
            for _ in 0..3 {
                let (a, b) = floquet_entries(cm, branch, r);
                let slope = 2.0 * (a * da - b * db);
                let step = (a - b) * (a + b) / slope;
                if !step.is_finite() || step == 0.0 {
                    break;
                }
                r -= step;
            }
            r
        };
        let (r1, r2) = (polish(q / qa), polish(qc / q));
        // Attribute roots to families via the factor that vanishes there.
        let mut halo = f64::NAN;
        let mut anti = f64::NAN;
        for r in [r1, r2] {
            let (a, b) = floquet_entries(cm, branch, r);
            let is_halo = match branch {
                // Planar halo: A + B = 0; vertical halo: A - B = 0.
                FloquetBranch::Horizontal => (a + b).abs() < (a - b).abs(),
                FloquetBranch::Vertical => (a - b).abs() < (a + b).abs(),
            };
            if is_halo {
                halo = r;
            } else {
                anti = r;
            }
        }
        if halo.is_nan() || anti.is_nan() {
            return Err(BifurcationError::DegenerateResonance {
                kind: anti_kind,
                denominator: disc,
            });
        }
        Ok((halo, anti))
    };
    let (ly, iy) = solve(FloquetBranch::Horizontal, ThresholdKind::HaloY, ThresholdKind::AntihaloY)?;
    let (lz, iz) = solve(FloquetBranch::Vertical, ThresholdKind::HaloZ, ThresholdKind::AntihaloZ)?;
    Ok(FloquetQuartet { ly, iy, lz, iz })
}

/// Frequency information along the planar Lyapunov branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalInfo {
    /// First-order in-plane frequency `omega_y + 2 alpha E`.
    pub kappa_y_first: f64,
    /// Frequency of the normal variational mode around the branch
    /// (imaginary inside the unstable window between the two thresholds).
    pub kappa_y_hnm: Complex64,
    /// Rotation number `kappa_y_hnm / kappa_y_first`.
    pub rho: Complex64,
}

/// Computes the normal-mode variational frequency along the planar branch.
pub fn variational_info(
    cm: &CmCoefficients,
    action: f64,
) -> Result<VariationalInfo, BifurcationError> {
    let s_ly = cm.sigma - 2.0 * (cm.alpha + cm.tau);
    let s_iy = cm.sigma - 2.0 * (cm.alpha - cm.tau);
    if s_ly.abs() < DENOMINATOR_GUARD || s_iy.abs() < DENOMINATOR_GUARD {
        return Err(BifurcationError::DegenerateResonance {
            kind: ThresholdKind::HaloY,
            denominator: s_ly.min(s_iy),
        });
    }
    let e_ly = cm.delta / s_ly;
    let e_iy = cm.delta / s_iy;
    let factor = (2.0 * cm.alpha - cm.sigma).powi(2) - 4.0 * cm.tau * cm.tau;
    let kappa2 = Complex64::new((e_iy - action) * (e_ly - action) * factor, 0.0);
    let kappa_y_hnm = kappa2.sqrt();
    let kappa_y_first = cm.omega_y + 2.0 * cm.alpha * action;
    Ok(VariationalInfo { kappa_y_first, kappa_y_hnm, rho: kappa_y_hnm / kappa_y_first })
}

/// Synodic-frame seed for the planar Lyapunov orbit at the halo bifurcation
/// energy: a perpendicular crossing `(X0, Y=0, Z=0, Xdot=0, Ydot0, Zdot=0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaloSeed {
    /// Crossing abscissa.
    pub x0: f64,
    /// Transverse velocity at the crossing.
    pub ydot0: f64,
    /// Normal-form phase of the crossing.
    pub theta: f64,
    /// Total action (first-order halo threshold).
    pub action: f64,
    /// Centre-manifold energy of the seed (normal-form value).
    pub energy_local: f64,
    /// Physical synodic energy of the seed.
    pub energy_phys: f64,
}

/// Builds synodic initial conditions on the planar Lyapunov orbit at the
/// first-order halo threshold.
///
/// The orbit is the axial branch `I_y = E_ly`, `I_z = 0` of the normal form.
/// The normal-form point is pushed through the inverse nonlinear
/// transformation (the generators applied to the coordinate functions in
/// ascending degree), then through the linear diagonalizing map and chart
/// scaling. The phase is solved so the crossing is perpendicular
/// (`y = 0`; `xdot = 0` then holds to the truncation order and exactly after
/// differential correction downstream).
pub fn halo_initial_conditions(result: &NormalFormResult) -> Result<HaloSeed, BifurcationError> {
    let cm = &result.cm;
    let nf = &result.normal_form;
    let geometry = &result.geometry;
    let ts = threshold_series(cm, geometry, ThresholdKind::HaloY, 1)?;
    let action = ts.e_cal;

    // Coordinate functions of the diagonal chart expressed in normal-form
    // variables: apply the generators in the order they were produced.
    let mut coords = Vec::with_capacity(6);
    for i in 0..6 {
        let mut exps = [0u8; 6];
        exps[i] = 1;
        let mut poly = SparsePolynomial::monomial(Chart::Normalized, exps, Complex64::ONE);
        for chi in &nf.generators {
            if !chi.is_zero() {
                poly = lie_transform_poly(&poly, chi, nf.max_degree)?;
            }
        }
        coords.push(poly);
    }

    let sqrt_i = action.sqrt();
    let nf_point = |theta: f64| -> [Complex64; 6] {
        let phase = Complex64::new(0.0, theta).exp();
        let q2 = Complex64::new(0.0, -1.0) * sqrt_i * phase;
        let p2 = sqrt_i * phase.conj();
        [Complex64::ZERO, q2, Complex64::ZERO, Complex64::ZERO, p2, Complex64::ZERO]
    };
    // Local y as a function of the phase; solve y(theta) = 0 near pi/2.
    let y_local = |theta: f64| -> f64 {
        let pt = nf_point(theta);
        let diag = [
            coords[0].evaluate(&pt),
            coords[1].evaluate(&pt),
            coords[2].evaluate(&pt),
            coords[3].evaluate(&pt),
            coords[4].evaluate(&pt),
            coords[5].evaluate(&pt),
        ];
        let local = result.map.to_local(&diag);
        local[1].re
    };
    let mut theta = std::f64::consts::FRAC_PI_2;
    let mut residual = y_local(theta);
    for _ in 0..60 {
        if residual.abs() < 1e-13 {
            break;
        }
        let h = 1e-6;
        let slope = (y_local(theta + h) - y_local(theta - h)) / (2.0 * h);
        if slope == 0.0 {
            break;
        }
        theta -= residual / slope;
        residual = y_local(theta);
    }
    if residual.abs() > 1e-10 {
        return Err(BifurcationError::SeedNotConverged { residual });
    }

    let pt = nf_point(theta);
    let diag = [
        coords[0].evaluate(&pt),
        coords[1].evaluate(&pt),
        coords[2].evaluate(&pt),
        coords[3].evaluate(&pt),
        coords[4].evaluate(&pt),
        coords[5].evaluate(&pt),
    ];
    let local_c = result.map.to_local(&diag);
    let imag = local_c.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > 1e-8 {
        return Err(BifurcationError::SeedNotConverged { residual: imag });
    }
    // z and pz vanish exactly on I_z = 0 by parity; enforce that.
    let local = cr3bp_model::LocalState {
        x: local_c[0].re,
        y: local_c[1].re,
        z: 0.0,
        px: local_c[3].re,
        py: local_c[4].re,
        pz: 0.0,
    };
    let synodic = cr3bp_model::local_to_synodic(geometry, &local);
    let energy_local = {
        // Normal-form energy of the seed point.
        let k = nf.k.to_polynomial();
        k.evaluate(&pt).re
    };
    let energy_phys = cr3bp_model::to_physical_energy(geometry, energy_local);
    Ok(HaloSeed {
        x0: synodic.x,
        ydot0: synodic.velocity()[1],
        theta,
        action,
        energy_local,
        energy_phys,
    })
}

/// Printed small-mass-ratio series for the first-order halo threshold
/// energy (local centre-manifold units): a cubic in `mu^(1/3)` for L1/L2,
/// in `mu` for L3.
pub fn small_mu_threshold_series(point: LibrationPoint, mu: f64) -> f64 {
    let (k, x) = match point {
        LibrationPoint::L1 => ([0.337333, -0.121141, -0.0187564, -0.115146], mu.cbrt()),
        LibrationPoint::L2 => ([0.337333, 0.121141, -0.0187564, -0.0605633], mu.cbrt()),
        LibrationPoint::L3 => ([0.321839, 1.18875, -5.9889, -108.784], mu),
    };
    ((k[3] * x + k[2]) * x + k[1]) * x + k[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_solver_matches_first_order() {
        // delta + f2 E = 0 -> E = -delta/f2.
        let c = solve_action_series(&[-2.5], 1);
        assert!((c[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn series_solver_second_order() {
        // delta + f2 E + f3 E^2 = 0 -> C1 = -1/f2, C2 = -f3/f2^3.
        let (f2, f3) = (-2.0, 0.7);
        let c = solve_action_series(&[f2, f3], 2);
        assert!((c[0] + 1.0 / f2).abs() < 1e-15);
        assert!((c[1] + f3 / (f2 * f2 * f2)).abs() < 1e-15);
    }
}

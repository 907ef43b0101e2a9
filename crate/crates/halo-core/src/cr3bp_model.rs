//! Circular spatial restricted three-body problem in the synodic frame, and
//! the scaled local expansion of its Hamiltonian around a collinear
//! equilibrium point.
//!
//! Units are the standard ones: the primaries have masses `1 - mu` (at
//! `X = mu`) and `mu` (at `X = mu - 1`), unit separation, and unit angular
//! velocity. The synodic Hamiltonian in Cartesian coordinates and conjugate
//! momenta `(X, Y, Z, PX, PY, PZ)` is
//!
//! ```text
//! H = (PX^2 + PY^2 + PZ^2)/2 + Y PX - X PY - (1 - mu)/r1 - mu/r2 ,
//! ```
//!
//! with `r1`, `r2` the distances to the primaries. Around each collinear
//! point the Hamiltonian is translated, scaled by the characteristic distance
//! `gamma` (a root of the Euler quintic) and expanded in scaled Legendre-type
//! polynomials, giving the local series
//!
//! ```text
//! H_local = (px^2 + py^2 + pz^2)/2 + y px - x py - sum_{n>=2} c_n(mu) T_n(x, rho)
//! ```
//!
//! whose coefficients `c_n` and chart conventions are produced here. Local
//! energies are mapped back to physical synodic energies by an affine
//! relation with slope `gamma^2`.

use crate::poly_algebra::{Chart, ExponentVector, GradedSeries, SparsePolynomial};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Convergence requirement on the Euler quintic residual.
const GAMMA_RESIDUAL_TOL: f64 = 1e-13;

/// Distance below which evaluation near a primary is refused.
const COLLISION_RADIUS: f64 = 1e-9;

/// Errors raised by model construction and evaluation.
#[derive(Debug, Error)]
pub enum ModelError {
    /// Mass ratio outside the supported half-open interval `(0, 1/2]`.
    #[error("mass ratio mu = {mu} outside the supported range (0, 1/2]")]
    MuOutOfRange {
        /// Offending value.
        mu: f64,
    },
    /// Expansion degree outside the supported range.
    #[error("expansion degree {degree} outside the supported range 4..=32")]
    DegreeOutOfRange {
        /// Offending value.
        degree: u32,
    },
    /// The quintic solver failed to reach the required residual.
    #[error("Euler quintic for {point:?} at mu = {mu} did not converge (residual {residual:.3e})")]
    RootNotConverged {
        /// Equilibrium point.
        point: LibrationPoint,
        /// Mass ratio.
        mu: f64,
        /// Final residual.
        residual: f64,
    },
    /// A state was evaluated too close to one of the primaries.
    #[error("state within collision radius of a primary (r1 = {r1:.3e}, r2 = {r2:.3e})")]
    CollisionSingularity {
        /// Distance to the heavy primary.
        r1: f64,
        /// Distance to the light primary.
        r2: f64,
    },
}

/// The three collinear equilibrium points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LibrationPoint {
    /// Between the primaries, at distance `gamma1` from the light one.
    L1,
    /// Beyond the light primary, at distance `gamma2` from it.
    L2,
    /// Beyond the heavy primary, at distance `gamma3` from it.
    L3,
}

impl std::fmt::Display for LibrationPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::L1 => write!(f, "L1"),
            Self::L2 => write!(f, "L2"),
            Self::L3 => write!(f, "L3"),
        }
    }
}

/// Problem selection: mass ratio, equilibrium point, and the truncation
/// degree of the local Hamiltonian expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    /// Mass ratio `mu` in `(0, 1/2]`.
    pub mu: f64,
    /// Collinear point the expansion is centred on.
    pub point: LibrationPoint,
    /// Maximum total degree kept in the polynomial expansion.
    pub expansion_degree: u32,
}

impl ProblemSpec {
    /// Creates a validated problem specification.
    pub fn new(point: LibrationPoint, mu: f64, expansion_degree: u32) -> Result<Self, ModelError> {
        let spec = Self { mu, point, expansion_degree };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the parameter ranges.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.mu > 0.0 && self.mu <= 0.5) || !self.mu.is_finite() {
            return Err(ModelError::MuOutOfRange { mu: self.mu });
        }
        if !(4..=32).contains(&self.expansion_degree) {
            return Err(ModelError::DegreeOutOfRange { degree: self.expansion_degree });
        }
        Ok(())
    }
}

/// Geometry of the scaled local chart at one collinear point.
///
/// The local chart is defined by
///
/// ```text
/// X = sign * gamma * x + mu + a_offset ,   Y = sign * gamma * y ,   Z = gamma * z ,
/// PX = sign * gamma * px ,  PY = sign * gamma * py + X_L ,  PZ = gamma * pz ,
/// ```
///
/// with `X_L = mu + a_offset` the equilibrium abscissa. The map is symplectic
/// with multiplier `gamma^2`: physical and local Hamiltonian values satisfy
/// `H = gamma^2 * H_local + E_L` (see [`to_physical_energy`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumGeometry {
    /// Equilibrium point.
    pub point: LibrationPoint,
    /// Mass ratio.
    pub mu: f64,
    /// Distance from the nearest primary to the equilibrium (Euler quintic
    /// root), which is also the length scale of the local chart.
    pub gamma: f64,
    /// Offset such that the equilibrium abscissa is `X_L = mu + a_offset`.
    pub a_offset: f64,
    /// Orientation of the local axes relative to the synodic ones: `-1` for
    /// L1 and L2, `+1` for L3.
    pub sign_convention: f64,
}

impl EquilibriumGeometry {
    /// Synodic abscissa of the equilibrium point.
    pub fn x_position(&self) -> f64 {
        self.mu + self.a_offset
    }

    /// Synodic energy of the equilibrium itself, i.e. the constant part of
    /// the affine local-to-physical energy relation.
    pub fn equilibrium_energy(&self) -> f64 {
        let xl = self.x_position();
        let r1 = (xl - self.mu).abs();
        let r2 = (xl - self.mu + 1.0).abs();
        -0.5 * xl * xl - (1.0 - self.mu) / r1 - self.mu / r2
    }
}

/// Coefficients `c_n(mu)` of the local Legendre-type expansion, `n >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCoefficients {
    /// `c[n]` is the coefficient of the scaled Legendre term `T_n`; entries
    /// `0` and `1` are unused and stored as zero.
    pub c: Vec<f64>,
}

impl ModelCoefficients {
    /// Coefficient `c_n`.
    pub fn c(&self, n: u32) -> f64 {
        self.c[n as usize]
    }

    /// Highest expansion degree carried.
    pub fn max_degree(&self) -> u32 {
        (self.c.len() - 1) as u32
    }
}

/// A synodic phase-space state `(X, Y, Z, PX, PY, PZ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SynodicState {
    /// Position along the primaries' axis.
    pub x: f64,
    /// In-plane transverse position.
    pub y: f64,
    /// Out-of-plane position.
    pub z: f64,
    /// Momentum conjugate to `x` (equals `Xdot - Y`).
    pub px: f64,
    /// Momentum conjugate to `y` (equals `Ydot + X`).
    pub py: f64,
    /// Momentum conjugate to `z` (equals `Zdot`).
    pub pz: f64,
}

impl SynodicState {
    /// Builds a state from positions and velocities.
    pub fn from_position_velocity(pos: [f64; 3], vel: [f64; 3]) -> Self {
        Self {
            x: pos[0],
            y: pos[1],
            z: pos[2],
            px: vel[0] - pos[1],
            py: vel[1] + pos[0],
            pz: vel[2],
        }
    }

    /// Velocities `(Xdot, Ydot, Zdot)` of this state.
    pub fn velocity(&self) -> [f64; 3] {
        [self.px + self.y, self.py - self.x, self.pz]
    }

    /// Flat `[X, Y, Z, PX, PY, PZ]` view.
    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.y, self.z, self.px, self.py, self.pz]
    }

    /// Builds a state from a flat array.
    pub fn from_array(a: [f64; 6]) -> Self {
        Self { x: a[0], y: a[1], z: a[2], px: a[3], py: a[4], pz: a[5] }
    }
}

/// A state in the scaled local chart `(x, y, z, px, py, pz)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalState {
    /// Scaled local position along the primaries' axis.
    pub x: f64,
    /// Scaled in-plane transverse position.
    pub y: f64,
    /// Scaled out-of-plane position.
    pub z: f64,
    /// Momentum conjugate to `x`.
    pub px: f64,
    /// Momentum conjugate to `y`.
    pub py: f64,
    /// Momentum conjugate to `z`.
    pub pz: f64,
}

/// Evaluates the Euler quintic for `point` and its derivative at `g`.
fn quintic_and_derivative(point: LibrationPoint, mu: f64, g: f64) -> (f64, f64) {
    // Coefficients of gamma^5 .. gamma^0.
    let coeffs = match point {
        LibrationPoint::L1 => {
            [1.0, -(3.0 - mu), 3.0 - 2.0 * mu, -mu, 2.0 * mu, -mu]
        }
        LibrationPoint::L2 => {
            [1.0, 3.0 - mu, 3.0 - 2.0 * mu, -mu, -2.0 * mu, -mu]
        }
        LibrationPoint::L3 => {
            [1.0, 2.0 + mu, 1.0 + 2.0 * mu, -(1.0 - mu), -2.0 * (1.0 - mu), -(1.0 - mu)]
        }
    };
    let mut f = 0.0;
    let mut df = 0.0;
    for &c in &coeffs {
        df = df * g + f;
        f = f * g + c;
    }
    (f, df)
}

/// Solves the Euler quintic for the distance `gamma` between `point` and its
/// nearest primary.
///
/// Newton iteration from the classical small-`mu` seeds, with a bisection
/// fallback on the bracketing interval if Newton stalls. The converged root
/// must satisfy the quintic to within an absolute residual of `1e-13`.
pub fn solve_gamma(point: LibrationPoint, mu: f64) -> Result<f64, ModelError> {
    if !(mu > 0.0 && mu <= 0.5) || !mu.is_finite() {
        return Err(ModelError::MuOutOfRange { mu });
    }
    let seed = match point {
        LibrationPoint::L1 | LibrationPoint::L2 => (mu / 3.0).cbrt(),
        LibrationPoint::L3 => 1.0 - 7.0 * mu / 12.0,
    };
    let mut g = seed;
    let mut converged = false;
    for _ in 0..100 {
        let (f, df) = quintic_and_derivative(point, mu, g);
        if df == 0.0 {
            break;
        }
        let step = f / df;
        g -= step;
        if step.abs() <= 1e-16 * g.abs() {
            converged = true;
            break;
        }
    }
    let residual = quintic_and_derivative(point, mu, g).0.abs();
    if !converged || !(residual <= GAMMA_RESIDUAL_TOL) || !g.is_finite() || g <= 0.0 {
        // Bisection fallback on a bracket that always contains the root.
        let (mut lo, mut hi) = match point {
            LibrationPoint::L1 | LibrationPoint::L2 => (1e-12, 1.0 - 1e-12),
            LibrationPoint::L3 => (0.5, 2.0),
        };
        let flo = quintic_and_derivative(point, mu, lo).0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fmid = quintic_and_derivative(point, mu, mid).0;
            if (fmid > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        g = 0.5 * (lo + hi);
        // Polish with a few Newton steps.
        for _ in 0..5 {
            let (f, df) = quintic_and_derivative(point, mu, g);
            if df != 0.0 {
                g -= f / df;
            }
        }
    }
    let residual = quintic_and_derivative(point, mu, g).0.abs();
    if residual <= GAMMA_RESIDUAL_TOL && g.is_finite() && g > 0.0 {
        Ok(g)
    } else {
        Err(ModelError::RootNotConverged { point, mu, residual })
    }
}

/// Builds the scaled local chart geometry at a collinear point.
pub fn equilibrium_geometry(point: LibrationPoint, mu: f64) -> Result<EquilibriumGeometry, ModelError> {
    let gamma = solve_gamma(point, mu)?;
    let (a_offset, sign_convention) = match point {
        LibrationPoint::L1 => (-1.0 + gamma, -1.0),
        LibrationPoint::L2 => (-1.0 - gamma, -1.0),
        LibrationPoint::L3 => (gamma, 1.0),
    };
    Ok(EquilibriumGeometry { point, mu, gamma, a_offset, sign_convention })
}

/// Computes the expansion coefficients `c_n(mu)` for `n = 2..=degree`.
pub fn model_coefficients(point: LibrationPoint, mu: f64, degree: u32) -> Result<ModelCoefficients, ModelError> {
    if !(4..=32).contains(&degree) {
        return Err(ModelError::DegreeOutOfRange { degree });
    }
    let gamma = solve_gamma(point, mu)?;
    let g3 = gamma.powi(3);
    let mut c = vec![0.0; degree as usize + 1];
    for n in 2..=degree {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let np1 = (n + 1) as i32;
        c[n as usize] = match point {
            LibrationPoint::L1 => {
                (mu + sign * (1.0 - mu) * (gamma / (1.0 - gamma)).powi(np1)) / g3
            }
            LibrationPoint::L2 => {
                sign * (mu + (1.0 - mu) * (gamma / (1.0 + gamma)).powi(np1)) / g3
            }
            LibrationPoint::L3 => {
                sign * (1.0 - mu + mu * (gamma / (1.0 + gamma)).powi(np1)) / g3
            }
        };
    }
    Ok(ModelCoefficients { c })
}

/// Scaled Legendre-type polynomial `T_n(x, rho)` in the local chart, defined
/// by the recurrence
///
/// ```text
/// T_0 = 1 ,  T_1 = x ,
/// T_n = ((2n - 1)/n) x T_{n-1} - ((n - 1)/n) rho^2 T_{n-2} ,
/// ```
///
/// with `rho^2 = x^2 + y^2 + z^2`. `T_n` equals `rho^n P_n(x / rho)` with
/// `P_n` the Legendre polynomial.
pub fn legendre_term(n: u32) -> SparsePolynomial {
    legendre_terms(n).pop().expect("legendre_terms returns n + 1 entries")
}

/// All scaled Legendre-type polynomials `T_0..=T_n` (shared-recurrence form
/// used when building the full Hamiltonian).
pub fn legendre_terms(n: u32) -> Vec<SparsePolynomial> {
    let chart = Chart::Original;
    let one = Complex64::ONE;
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(SparsePolynomial::constant(chart, one));
    if n == 0 {
        return out;
    }
    let x = SparsePolynomial::monomial(chart, [1, 0, 0, 0, 0, 0], one);
    out.push(x.clone());
    let mut rho2 = SparsePolynomial::zero(chart);
    rho2.add_term(ExponentVector([2, 0, 0, 0, 0, 0]), one);
    rho2.add_term(ExponentVector([0, 2, 0, 0, 0, 0]), one);
    rho2.add_term(ExponentVector([0, 0, 2, 0, 0, 0]), one);
    for k in 2..=n {
        let kf = f64::from(k);
        let a = (2.0 * kf - 1.0) / kf;
        let b = (kf - 1.0) / kf;
        let mut t = x
            .mul(&out[(k - 1) as usize], None)
            .expect("same-chart product cannot fail")
            .scaled(Complex64::new(a, 0.0));
        let tail = rho2
            .mul(&out[(k - 2) as usize], None)
            .expect("same-chart product cannot fail")
            .scaled(Complex64::new(b, 0.0));
        t.sub_assign_poly(&tail);
        out.push(t);
    }
    out
}

/// Builds the local Hamiltonian expansion
/// `H = (px^2 + py^2 + pz^2)/2 + y px - x py - sum_{n=2}^{D} c_n T_n`
/// as a graded series in the real local chart.
pub fn build_hamiltonian(spec: &ProblemSpec, coeffs: &ModelCoefficients) -> GradedSeries {
    let chart = Chart::Original;
    let d = spec.expansion_degree;
    let mut h = SparsePolynomial::zero(chart);
    let half = Complex64::new(0.5, 0.0);
    let one = Complex64::ONE;
    h.add_term(ExponentVector([0, 0, 0, 2, 0, 0]), half);
    h.add_term(ExponentVector([0, 0, 0, 0, 2, 0]), half);
    h.add_term(ExponentVector([0, 0, 0, 0, 0, 2]), half);
    h.add_term(ExponentVector([0, 1, 0, 1, 0, 0]), one);
    h.add_term(ExponentVector([1, 0, 0, 0, 1, 0]), -one);
    let t = legendre_terms(d);
    for n in 2..=d {
        let cn = coeffs.c(n);
        if cn != 0.0 {
            h.add_assign_poly(&t[n as usize].scaled(Complex64::new(-cn, 0.0)));
        }
    }
    GradedSeries::from_polynomial(&h, d)
}

/// Maps a local Hamiltonian value at a collinear point to the physical
/// synodic energy: `E = gamma^2 * E_local + E_equilibrium`.
pub fn to_physical_energy(geometry: &EquilibriumGeometry, local_energy: f64) -> f64 {
    geometry.gamma * geometry.gamma * local_energy + geometry.equilibrium_energy()
}

/// Converts a local-chart state to the synodic frame.
pub fn local_to_synodic(geometry: &EquilibriumGeometry, local: &LocalState) -> SynodicState {
    let g = geometry.gamma;
    let s = geometry.sign_convention;
    let xl = geometry.x_position();
    SynodicState {
        x: s * g * local.x + xl,
        y: s * g * local.y,
        z: g * local.z,
        px: s * g * local.px,
        py: s * g * local.py + xl,
        pz: g * local.pz,
    }
}

/// Converts a synodic state to the scaled local chart of a collinear point.
pub fn synodic_to_local(geometry: &EquilibriumGeometry, state: &SynodicState) -> LocalState {
    let g = geometry.gamma;
    let s = geometry.sign_convention;
    let xl = geometry.x_position();
    LocalState {
        x: (state.x - xl) / (s * g),
        y: state.y / (s * g),
        z: state.z / g,
        px: state.px / (s * g),
        py: (state.py - xl) / (s * g),
        pz: state.pz / g,
    }
}

/// Distances from a synodic position to the two primaries.
fn primary_distances(mu: f64, x: f64, y: f64, z: f64) -> (f64, f64) {
    let r1 = ((x - mu).powi(2) + y * y + z * z).sqrt();
    let r2 = ((x - mu + 1.0).powi(2) + y * y + z * z).sqrt();
    (r1, r2)
}

/// Synodic Hamiltonian (energy) of a state.
pub fn synodic_energy(mu: f64, state: &SynodicState) -> Result<f64, ModelError> {
    let (r1, r2) = primary_distances(mu, state.x, state.y, state.z);
    if r1 < COLLISION_RADIUS || r2 < COLLISION_RADIUS {
        return Err(ModelError::CollisionSingularity { r1, r2 });
    }
    let kinetic = 0.5 * (state.px * state.px + state.py * state.py + state.pz * state.pz);
    Ok(kinetic + state.y * state.px - state.x * state.py - (1.0 - mu) / r1 - mu / r2)
}

/// Hamiltonian vector field of the synodic problem; the returned struct holds
/// the time derivatives of the corresponding state entries.
pub fn synodic_vector_field(mu: f64, state: &SynodicState) -> Result<SynodicState, ModelError> {
    let (r1, r2) = primary_distances(mu, state.x, state.y, state.z);
    if r1 < COLLISION_RADIUS || r2 < COLLISION_RADIUS {
        return Err(ModelError::CollisionSingularity { r1, r2 });
    }
    let k1 = (1.0 - mu) / (r1 * r1 * r1);
    let k2 = mu / (r2 * r2 * r2);
    let ux = k1 * (state.x - mu) + k2 * (state.x - mu + 1.0);
    let uy = (k1 + k2) * state.y;
    let uz = (k1 + k2) * state.z;
    Ok(SynodicState {
        x: state.px + state.y,
        y: state.py - state.x,
        z: state.pz,
        px: state.py - ux,
        py: -state.px - uy,
        pz: -uz,
    })
}

/// Hessian of the gravitational potential `U_grav = -(1-mu)/r1 - mu/r2` with
/// respect to position, used by the variational equations.
pub fn gravity_hessian(mu: f64, pos: [f64; 3]) -> Result<[[f64; 3]; 3], ModelError> {
    let (r1, r2) = primary_distances(mu, pos[0], pos[1], pos[2]);
    if r1 < COLLISION_RADIUS || r2 < COLLISION_RADIUS {
        return Err(ModelError::CollisionSingularity { r1, r2 });
    }
    let masses = [1.0 - mu, mu];
    let centres = [mu, mu - 1.0];
    let radii = [r1, r2];
    let mut h = [[0.0; 3]; 3];
    for k in 0..2 {
        let d = [pos[0] - centres[k], pos[1], pos[2]];
        let r3 = radii[k].powi(3);
        let r5 = radii[k].powi(5);
        for a in 0..3 {
            for b in 0..3 {
                let delta = if a == b { 1.0 } else { 0.0 };
                h[a][b] += masses[k] * (delta / r3 - 3.0 * d[a] * d[b] / r5);
            }
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const MU_EM: f64 = 0.01215058;

    #[test]
    fn l1_gamma_is_half_at_equal_masses() {
        let g = solve_gamma(LibrationPoint::L1, 0.5).unwrap();
        assert_relative_eq!(g, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn l2_l3_coincide_at_equal_masses() {
        let g2 = solve_gamma(LibrationPoint::L2, 0.5).unwrap();
        let g3 = solve_gamma(LibrationPoint::L3, 0.5).unwrap();
        assert_relative_eq!(g2, g3, max_relative = 1e-13);
    }

    #[test]
    fn local_chart_round_trip() {
        let geom = equilibrium_geometry(LibrationPoint::L2, MU_EM).unwrap();
        let local = LocalState { x: 0.3, y: -0.2, z: 0.15, px: 0.05, py: -0.4, pz: 0.07 };
        let back = synodic_to_local(&geom, &local_to_synodic(&geom, &local));
        assert_relative_eq!(back.x, local.x, max_relative = 1e-13);
        assert_relative_eq!(back.y, local.y, max_relative = 1e-13);
        assert_relative_eq!(back.z, local.z, max_relative = 1e-13);
        assert_relative_eq!(back.px, local.px, max_relative = 1e-13);
        assert_relative_eq!(back.py, local.py, max_relative = 1e-13);
        assert_relative_eq!(back.pz, local.pz, max_relative = 1e-13);
    }

    #[test]
    fn equilibrium_is_critical_point_of_field() {
        for point in [LibrationPoint::L1, LibrationPoint::L2, LibrationPoint::L3] {
            let geom = equilibrium_geometry(point, MU_EM).unwrap();
            let eq = local_to_synodic(&geom, &LocalState::default());
            let f = synodic_vector_field(MU_EM, &eq).unwrap();
            for v in f.to_array() {
                assert!(v.abs() < 1e-12, "field residual {v:.3e} at {point}");
            }
        }
    }
}

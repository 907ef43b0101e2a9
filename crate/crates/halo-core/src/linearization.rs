//! Linear analysis at a collinear equilibrium: saddle x centre x centre
//! splitting of the quadratic Hamiltonian and the complex symplectic change
//! of variables that diagonalizes it.
//!
//! The quadratic part of the local Hamiltonian is
//!
//! ```text
//! H2 = (px^2 + py^2 + pz^2)/2 + y px - x py - c2 x^2 + (c2/2)(y^2 + z^2) ,
//! ```
//!
//! whose in-plane characteristic polynomial is
//! `lambda^4 + (2 - c2) lambda^2 + (1 + c2 - 2 c2^2)`. For `c2 > 1` the
//! squared roots `eta1 < 0 < eta2` give one hyperbolic pair
//! `+-lambda_x = +-sqrt(eta2)` and one elliptic pair `+-i omega_y`,
//! `omega_y = sqrt(-eta1)`; the vertical pair is `+-i omega_z`,
//! `omega_z = sqrt(c2)`. The small difference `delta = omega_y - omega_z`
//! is the detuning of the near 1:1 resonance between the two centres.
//!
//! [`build_diagonalizing_map`] returns the complex 6x6 matrix `C` such that
//! substituting `(x, .., pz) = C (q1, .., p3)` turns `H2` into
//! `lambda_x q1 p1 + i omega_y q2 p2 + i omega_z q3 p3` while preserving the
//! canonical structure exactly (`C^T J C = J`). The phases of the elliptic
//! columns are fixed (elliptic momentum column equal to `i` times the
//! conjugate coordinate column, negative Krein pairing) so that downstream
//! action-angle coefficients come out real with a definite sign convention.

use crate::cr3bp_model::ModelCoefficients;
use crate::poly_algebra::{Chart, ExponentVector, SparsePolynomial};
use nalgebra::SMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Complex 6x6 matrix type used for the diagonalizing map.
pub type CMatrix6 = SMatrix<Complex64, 6, 6>;

/// Upper bound accepted on the symplectic defect of the constructed map.
pub const SYMPLECTIC_TOL: f64 = 1e-10;

/// Errors raised by the linear analysis.
#[derive(Debug, Error)]
pub enum LinearizationError {
    /// The quadratic coefficient does not produce the saddle x centre x
    /// centre structure characteristic of the collinear points.
    #[error("c2 = {c2} does not yield a saddle-centre-centre splitting (requires c2 > 1)")]
    SaddleCentreViolated {
        /// Offending quadratic coefficient.
        c2: f64,
    },
    /// The hyperbolic exponent is numerically degenerate.
    #[error("hyperbolic exponent eta2 = {eta2:.3e} below the degeneracy guard 1e-10")]
    NearDegenerate {
        /// Squared hyperbolic exponent.
        eta2: f64,
    },
    /// The constructed map lost symplecticity beyond tolerance.
    #[error("diagonalizing map symplectic defect {defect:.3e} exceeds {SYMPLECTIC_TOL:.0e}")]
    SymplecticityLost {
        /// Max-norm of `C^T J C - J`.
        defect: f64,
    },
    /// The elliptic Krein pairing had an unexpected sign.
    #[error("elliptic eigenvector pairing has unexpected sign ({pairing:.3e})")]
    UnexpectedKreinSign {
        /// Imaginary part of the symplectic self-pairing.
        pairing: f64,
    },
}

/// Frequencies and exponents of the linearized motion at a collinear point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticData {
    /// Quadratic expansion coefficient `c2(mu)`.
    pub c2: f64,
    /// Negative squared in-plane elliptic root (`eta1 = -omega_y^2`).
    pub eta1: f64,
    /// Squared hyperbolic exponent (`eta2 = lambda_x^2`).
    pub eta2: f64,
    /// In-plane elliptic frequency.
    pub omega_y: f64,
    /// Vertical (out-of-plane) frequency.
    pub omega_z: f64,
    /// Hyperbolic exponent.
    pub lambda_x: f64,
    /// Detuning `omega_y - omega_z` of the 1:1 resonance.
    pub delta: f64,
}

/// Builds [`QuadraticData`] from the bare quadratic coefficient.
pub fn quadratic_data_from_c2(c2: f64) -> Result<QuadraticData, LinearizationError> {
    if !(c2 > 1.0) || !c2.is_finite() {
        return Err(LinearizationError::SaddleCentreViolated { c2 });
    }
    let disc = (9.0 * c2 * c2 - 8.0 * c2).sqrt();
    let eta1 = (c2 - 2.0 - disc) / 2.0;
    let eta2 = (c2 - 2.0 + disc) / 2.0;
    if eta2 < 1e-10 {
        return Err(LinearizationError::NearDegenerate { eta2 });
    }
    let omega_y = (-eta1).sqrt();
    let omega_z = c2.sqrt();
    let lambda_x = eta2.sqrt();
    let delta = omega_y - omega_z;
    assert!(eta1 < 0.0 && eta2 > 0.0, "saddle-centre splitting violated after guards");
    assert!(
        (delta / omega_z).abs() < 0.25,
        "detuning delta/omega_z = {} outside the near-resonant regime",
        delta / omega_z
    );
    Ok(QuadraticData { c2, eta1, eta2, omega_y, omega_z, lambda_x, delta })
}

/// Builds [`QuadraticData`] from model expansion coefficients.
pub fn quadratic_data(coeffs: &ModelCoefficients) -> Result<QuadraticData, LinearizationError> {
    quadratic_data_from_c2(coeffs.c(2))
}

/// The complex linear symplectic change of variables that diagonalizes the
/// quadratic Hamiltonian.
///
/// `forward` maps diagonal variables to local ones
/// (`(x, .., pz)^T = forward * (q1, .., p3)^T`); `inverse` is its exact
/// symplectic inverse `-J forward^T J`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalizingMap {
    /// Diagonal-to-local matrix.
    pub forward: CMatrix6,
    /// Local-to-diagonal matrix.
    pub inverse: CMatrix6,
}

impl DiagonalizingMap {
    /// Applies the forward map to a diagonal-chart point.
    pub fn to_local(&self, diag: &[Complex64; 6]) -> [Complex64; 6] {
        let v = nalgebra::SVector::<Complex64, 6>::from_column_slice(diag);
        let w = self.forward * v;
        [w[0], w[1], w[2], w[3], w[4], w[5]]
    }

    /// Applies the inverse map to a local-chart point.
    pub fn to_diagonal(&self, local: &[Complex64; 6]) -> [Complex64; 6] {
        let v = nalgebra::SVector::<Complex64, 6>::from_column_slice(local);
        let w = self.inverse * v;
        [w[0], w[1], w[2], w[3], w[4], w[5]]
    }
}

/// Standard symplectic form on six variables ordered `(q1, q2, q3, p1, p2, p3)`.
pub fn symplectic_form() -> CMatrix6 {
    let mut j = CMatrix6::zeros();
    for i in 0..3 {
        j[(i, i + 3)] = Complex64::ONE;
        j[(i + 3, i)] = -Complex64::ONE;
    }
    j
}

/// Max-norm of the symplectic defect `C^T J C - J` of a candidate map.
pub fn symplectic_defect(c: &CMatrix6) -> f64 {
    let j = symplectic_form();
    let d = c.transpose() * j * c - j;
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// In-plane eigenvector `(x, y, px, py) = (1, s, lambda - s, 1 + lambda s)`
/// with `s = (lambda^2 - 1 - 2 c2) / (2 lambda)`.
fn planar_eigenvector(c2: f64, lambda: Complex64) -> [Complex64; 4] {
    let s = (lambda * lambda - Complex64::new(1.0 + 2.0 * c2, 0.0)) / (2.0 * lambda);
    [Complex64::ONE, s, lambda - s, Complex64::ONE + lambda * s]
}

/// Symplectic pairing of two in-plane vectors ordered `(x, y, px, py)`.
fn planar_pairing(u: &[Complex64; 4], w: &[Complex64; 4]) -> Complex64 {
    u[0] * w[2] - u[2] * w[0] + u[1] * w[3] - u[3] * w[1]
}

/// Builds the symplectic diagonalizing map for the given linear data.
///
/// Column conventions (columns ordered `q1, q2, q3, p1, p2, p3`, rows
/// `x, y, z, px, py, pz`):
///
/// * hyperbolic pair from the real eigenvectors at `+-lambda_x`, normalized
///   so their symplectic pairing is one;
/// * in-plane elliptic pair from the eigenvector at `+i omega_y` scaled to
///   unit pairing, with the momentum column `i` times the conjugate of the
///   coordinate column;
/// * vertical pair `z = (i q3 + p3)/sqrt(2 omega_z)`,
///   `pz = -sqrt(omega_z/2) (q3 + i p3)`, the same phase convention as the
///   in-plane pair.
pub fn build_diagonalizing_map(qd: &QuadraticData) -> Result<DiagonalizingMap, LinearizationError> {
    if qd.eta2 < 1e-10 {
        return Err(LinearizationError::NearDegenerate { eta2: qd.eta2 });
    }
    let c2 = qd.c2;
    let mut c = CMatrix6::zeros();
    // Row indices of the in-plane variables (x, y, px, py) in the 6d chart.
    let planar_rows = [0usize, 1, 3, 4];

    // Hyperbolic pair.
    let u1 = planar_eigenvector(c2, Complex64::new(qd.lambda_x, 0.0));
    let w1 = planar_eigenvector(c2, Complex64::new(-qd.lambda_x, 0.0));
    let ch = planar_pairing(&u1, &w1).re;
    if ch.abs() < 1e-14 {
        return Err(LinearizationError::NearDegenerate { eta2: qd.eta2 });
    }
    let scale = ch.abs().sqrt();
    let w_sign = ch.signum();
    for (k, &row) in planar_rows.iter().enumerate() {
        c[(row, 0)] = u1[k] / scale;
        c[(row, 3)] = w1[k] * w_sign / scale;
    }

    // In-plane elliptic pair (negative Krein pairing expected).
    let v2 = planar_eigenvector(c2, Complex64::new(0.0, qd.omega_y));
    let v2c = [v2[0].conj(), v2[1].conj(), v2[2].conj(), v2[3].conj()];
    let pairing = planar_pairing(&v2, &v2c);
    let t = pairing.im;
    if t >= 0.0 {
        return Err(LinearizationError::UnexpectedKreinSign { pairing: t });
    }
    let a = (-t).sqrt();
    for (k, &row) in planar_rows.iter().enumerate() {
        c[(row, 1)] = v2[k] / a;
        c[(row, 4)] = Complex64::I * v2[k].conj() / a;
    }

    // Vertical pair.
    let wz = qd.omega_z;
    let inv = 1.0 / (2.0 * wz).sqrt();
    let half = (wz / 2.0).sqrt();
    c[(2, 2)] = Complex64::new(0.0, inv);
    c[(5, 2)] = Complex64::new(-half, 0.0);
    c[(2, 5)] = Complex64::new(inv, 0.0);
    c[(5, 5)] = Complex64::new(0.0, -half);

    let defect = symplectic_defect(&c);
    if defect > SYMPLECTIC_TOL {
        return Err(LinearizationError::SymplecticityLost { defect });
    }
    // Exact symplectic inverse: C^{-1} = -J C^T J.
    let j = symplectic_form();
    let inverse = -j * c.transpose() * j;
    Ok(DiagonalizingMap { forward: c, inverse })
}

/// The diagonalized quadratic Hamiltonian
/// `lambda_x q1 p1 + i omega_y q2 p2 + i omega_z q3 p3`.
pub fn h2_diagonal(qd: &QuadraticData) -> SparsePolynomial {
    let mut h = SparsePolynomial::zero(Chart::Diagonal);
    h.add_term(ExponentVector([1, 0, 0, 1, 0, 0]), Complex64::new(qd.lambda_x, 0.0));
    h.add_term(ExponentVector([0, 1, 0, 0, 1, 0]), Complex64::new(0.0, qd.omega_y));
    h.add_term(ExponentVector([0, 0, 1, 0, 0, 1]), Complex64::new(0.0, qd.omega_z));
    h
}

/// The exactly resonant part of the quadratic Hamiltonian,
/// `lambda_x q1 p1 + i omega_z (q2 p2 + q3 p3)`; the detuning remainder
/// `i delta q2 p2` is the perturbation the resonant normal form retains.
pub fn h2_resonant(qd: &QuadraticData) -> SparsePolynomial {
    let mut h = SparsePolynomial::zero(Chart::Normalized);
    h.add_term(ExponentVector([1, 0, 0, 1, 0, 0]), Complex64::new(qd.lambda_x, 0.0));
    h.add_term(ExponentVector([0, 1, 0, 0, 1, 0]), Complex64::new(0.0, qd.omega_z));
    h.add_term(ExponentVector([0, 0, 1, 0, 0, 1]), Complex64::new(0.0, qd.omega_z));
    h
}

/// The quadratic part of the local Hamiltonian in the real chart,
/// `(px^2 + py^2 + pz^2)/2 + y px - x py - c2 x^2 + (c2/2)(y^2 + z^2)`.
pub fn h2_local(c2: f64) -> SparsePolynomial {
    let mut h = SparsePolynomial::zero(Chart::Original);
    let half = Complex64::new(0.5, 0.0);
    h.add_term(ExponentVector([0, 0, 0, 2, 0, 0]), half);
    h.add_term(ExponentVector([0, 0, 0, 0, 2, 0]), half);
    h.add_term(ExponentVector([0, 0, 0, 0, 0, 2]), half);
    h.add_term(ExponentVector([0, 1, 0, 1, 0, 0]), Complex64::ONE);
    h.add_term(ExponentVector([1, 0, 0, 0, 1, 0]), -Complex64::ONE);
    h.add_term(ExponentVector([2, 0, 0, 0, 0, 0]), Complex64::new(-c2, 0.0));
    h.add_term(ExponentVector([0, 2, 0, 0, 0, 0]), Complex64::new(0.5 * c2, 0.0));
    h.add_term(ExponentVector([0, 0, 2, 0, 0, 0]), Complex64::new(0.5 * c2, 0.0));
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hill_limit_frequencies() {
        // c2 = 4 is the common L1/L2 limit as mu -> 0.
        let qd = quadratic_data_from_c2(4.0).unwrap();
        assert_relative_eq!(qd.lambda_x, (1.0 + 2.0 * 7.0_f64.sqrt()).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(qd.omega_z, 2.0, max_relative = 1e-15);
        assert_relative_eq!(qd.delta, 0.0715942, max_relative = 1e-5);
    }

    #[test]
    fn rejects_non_saddle() {
        assert!(matches!(
            quadratic_data_from_c2(0.9),
            Err(LinearizationError::SaddleCentreViolated { .. })
        ));
        assert!(matches!(
            quadratic_data_from_c2(1.0),
            Err(LinearizationError::SaddleCentreViolated { .. })
        ));
    }

    #[test]
    fn map_is_symplectic() {
        let qd = quadratic_data_from_c2(4.0).unwrap();
        let map = build_diagonalizing_map(&qd).unwrap();
        assert!(symplectic_defect(&map.forward) < 1e-12);
        // inverse really inverts
        let prod = map.forward * map.inverse;
        let err = (prod - CMatrix6::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "inverse defect {err:.3e}");
    }
}

//! Oracle tests for the equilibrium geometry, the scaled local expansion,
//! and the exact synodic dynamics: closed-form special cases, finite
//! difference cross-checks, and the truncation-error bound that ties the
//! local polynomial Hamiltonian to the exact potential.

use halo_core::cr3bp_model::{
    self, LibrationPoint, LocalState, ProblemSpec, SynodicState,
};
use num_complex::Complex64;

const MU_EARTH_MOON: f64 = 0.01215058;

#[test]
fn quintic_residual_vanishes_for_all_points() {
    for mu in [3.0404326e-6, 1e-3, MU_EARTH_MOON, 0.2, 0.5] {
        for point in [LibrationPoint::L1, LibrationPoint::L2, LibrationPoint::L3] {
            let gamma = cr3bp_model::solve_gamma(point, mu).unwrap();
            // Re-evaluate the quintic the solver claims to have zeroed.
            let residual = match point {
                LibrationPoint::L1 => {
                    gamma.powi(5) - (3.0 - mu) * gamma.powi(4) + (3.0 - 2.0 * mu) * gamma.powi(3)
                        - mu * gamma.powi(2)
                        + 2.0 * mu * gamma
                        - mu
                }
                LibrationPoint::L2 => {
                    gamma.powi(5) + (3.0 - mu) * gamma.powi(4) + (3.0 - 2.0 * mu) * gamma.powi(3)
                        - mu * gamma.powi(2)
                        - 2.0 * mu * gamma
                        - mu
                }
                LibrationPoint::L3 => {
                    gamma.powi(5)
                        + (2.0 + mu) * gamma.powi(4)
                        + (1.0 + 2.0 * mu) * gamma.powi(3)
                        - (1.0 - mu) * gamma.powi(2)
                        - 2.0 * (1.0 - mu) * gamma
                        - (1.0 - mu)
                }
            };
            assert!(
                residual.abs() <= 1e-12,
                "{point:?} mu={mu}: quintic residual {residual:.3e}"
            );
        }
    }
}

#[test]
fn equal_masses_have_closed_form_geometry() {
    // At mu = 1/2 the inner point sits exactly midway between the primaries,
    // and the outer points are mirror images of each other.
    let g1 = cr3bp_model::solve_gamma(LibrationPoint::L1, 0.5).unwrap();
    assert!((g1 - 0.5).abs() <= 1e-14, "gamma_1(1/2) = {g1}");
    let g2 = cr3bp_model::solve_gamma(LibrationPoint::L2, 0.5).unwrap();
    let g3 = cr3bp_model::solve_gamma(LibrationPoint::L3, 0.5).unwrap();
    assert!((g2 - g3).abs() <= 1e-14, "gamma_2 {g2} != gamma_3 {g3} at mu = 1/2");
}

#[test]
fn small_mass_ratio_matches_hill_scaling() {
    // gamma_{1,2} -> (mu/3)^(1/3) as mu -> 0.
    let mu: f64 = 1e-9;
    let hill = (mu / 3.0).cbrt();
    for point in [LibrationPoint::L1, LibrationPoint::L2] {
        let gamma = cr3bp_model::solve_gamma(point, mu).unwrap();
        let rel = (gamma / hill - 1.0).abs();
        assert!(rel <= 1e-3, "{point:?}: gamma/hill - 1 = {rel:.3e}");
    }
    // gamma_3 -> 1 (with a 7 mu / 12 correction).
    let g3 = cr3bp_model::solve_gamma(LibrationPoint::L3, mu).unwrap();
    assert!((g3 - (1.0 - 7.0 * mu / 12.0)).abs() <= 1e-12);
}

#[test]
fn chart_round_trip_is_identity() {
    for point in [LibrationPoint::L1, LibrationPoint::L2, LibrationPoint::L3] {
        let geometry = cr3bp_model::equilibrium_geometry(point, MU_EARTH_MOON).unwrap();
        let local = LocalState { x: 0.3, y: -0.2, z: 0.15, px: 0.05, py: -0.4, pz: 0.21 };
        let back = cr3bp_model::synodic_to_local(
            &geometry,
            &cr3bp_model::local_to_synodic(&geometry, &local),
        );
        for (a, b) in [
            (local.x, back.x),
            (local.y, back.y),
            (local.z, back.z),
            (local.px, back.px),
            (local.py, back.py),
            (local.pz, back.pz),
        ] {
            assert!((a - b).abs() <= 1e-13, "round trip {a} -> {b}");
        }
    }
}

#[test]
fn equilibrium_is_a_fixed_point_with_the_reported_energy() {
    for point in [LibrationPoint::L1, LibrationPoint::L2, LibrationPoint::L3] {
        let geometry = cr3bp_model::equilibrium_geometry(point, MU_EARTH_MOON).unwrap();
        let state = cr3bp_model::local_to_synodic(&geometry, &LocalState::default());
        let field = cr3bp_model::synodic_vector_field(MU_EARTH_MOON, &state).unwrap();
        for v in field.to_array() {
            assert!(v.abs() <= 1e-12, "{point:?}: residual velocity {v:.3e}");
        }
        let energy = cr3bp_model::synodic_energy(MU_EARTH_MOON, &state).unwrap();
        assert!((energy - geometry.equilibrium_energy()).abs() <= 1e-13);
        // Zero local energy converts to the equilibrium energy.
        assert!(
            (cr3bp_model::to_physical_energy(&geometry, 0.0) - geometry.equilibrium_energy())
                .abs()
                <= 1e-13
        );
    }
}

/// The decisive expansion oracle: the truncated local Hamiltonian, scaled
/// back to physical units, must reproduce the exact synodic energy of the
/// mapped state up to the truncation order. At radius 1e-2 a degree-12
/// expansion leaves a remainder far below double precision resolution.
#[test]
fn local_expansion_reproduces_exact_energy() {
    for point in [LibrationPoint::L1, LibrationPoint::L2, LibrationPoint::L3] {
        let spec = ProblemSpec::new(point, MU_EARTH_MOON, 12).unwrap();
        let geometry = cr3bp_model::equilibrium_geometry(point, MU_EARTH_MOON).unwrap();
        let coeffs = cr3bp_model::model_coefficients(point, MU_EARTH_MOON, 12).unwrap();
        let hamiltonian = cr3bp_model::build_hamiltonian(&spec, &coeffs);

        let local = LocalState {
            x: 7e-3,
            y: -5e-3,
            z: 4e-3,
            px: 3e-3,
            py: -6e-3,
            pz: 2e-3,
        };
        let point_c: [Complex64; 6] = [
            Complex64::new(local.x, 0.0),
            Complex64::new(local.y, 0.0),
            Complex64::new(local.z, 0.0),
            Complex64::new(local.px, 0.0),
            Complex64::new(local.py, 0.0),
            Complex64::new(local.pz, 0.0),
        ];
        let e_local = hamiltonian.to_polynomial().evaluate(&point_c);
        assert!(e_local.im.abs() <= 1e-15);

        let synodic = cr3bp_model::local_to_synodic(&geometry, &local);
        let e_exact = cr3bp_model::synodic_energy(MU_EARTH_MOON, &synodic).unwrap();
        let e_converted = cr3bp_model::to_physical_energy(&geometry, e_local.re);
        assert!(
            (e_converted - e_exact).abs() <= 1e-12,
            "{point:?}: truncated {e_converted} vs exact {e_exact}"
        );
    }
}

#[test]
fn vector_field_is_hamiltonian_for_the_exact_energy() {
    // Central differences of the energy must reproduce the field through
    // Hamilton's equations: (dX, dY, dZ) = dH/d(PX, PY, PZ) and
    // (dPX, dPY, dPZ) = -dH/d(X, Y, Z).
    let mu = MU_EARTH_MOON;
    let state = SynodicState { x: -0.9, y: 0.2, z: 0.1, px: -0.15, py: -0.85, pz: 0.04 };
    let field = cr3bp_model::synodic_vector_field(mu, &state).unwrap().to_array();

    let h = 1e-6;
    let energy_at = |a: [f64; 6]| -> f64 {
        cr3bp_model::synodic_energy(mu, &SynodicState::from_array(a)).unwrap()
    };
    let base = state.to_array();
    let mut gradient = [0.0; 6];
    for (i, slot) in gradient.iter_mut().enumerate() {
        let mut plus = base;
        let mut minus = base;
        plus[i] += h;
        minus[i] -= h;
        *slot = (energy_at(plus) - energy_at(minus)) / (2.0 * h);
    }
    for i in 0..3 {
        assert!((field[i] - gradient[i + 3]).abs() <= 1e-8);
        assert!((field[i + 3] + gradient[i]).abs() <= 1e-8);
    }
}

#[test]
fn gravity_hessian_matches_finite_differences_of_the_gradient() {
    let mu = MU_EARTH_MOON;
    let pos = [-0.83, 0.11, 0.07];
    let hessian = cr3bp_model::gravity_hessian(mu, pos).unwrap();

    // U_X = PY - dPX/dt with PX = PY = 0 at rest: recover the gravity
    // gradient from the momentum part of the vector field.
    let gradient_at = |p: [f64; 3]| -> [f64; 3] {
        let state = SynodicState { x: p[0], y: p[1], z: p[2], py: 0.0, ..Default::default() };
        let dot = cr3bp_model::synodic_vector_field(mu, &state).unwrap();
        // dPX = PY - U_X = -U_X, dPY = -PX - U_Y = -U_Y, dPZ = -U_Z.
        [-dot.px, -dot.py, -dot.pz]
    };
    let h = 1e-6;
    for j in 0..3 {
        let mut plus = pos;
        let mut minus = pos;
        plus[j] += h;
        minus[j] -= h;
        let gp = gradient_at(plus);
        let gm = gradient_at(minus);
        for i in 0..3 {
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            assert!(
                (hessian[i][j] - fd).abs() <= 1e-6,
                "H[{i}][{j}] = {} vs fd {fd}",
                hessian[i][j]
            );
        }
    }
}

#[test]
fn coefficients_decay_inside_the_convergence_region() {
    // |c_n| grows at most geometrically; the scaled sequence must stay
    // bounded so that the degree-by-degree expansions converge near the
    // libration point.
    let coeffs = cr3bp_model::model_coefficients(LibrationPoint::L1, MU_EARTH_MOON, 20).unwrap();
    assert_eq!(coeffs.max_degree(), 20);
    for n in 2..=20 {
        assert!(coeffs.c(n).is_finite());
        // The defining series have ratio gamma/(1 -+ gamma) < 1, so the
        // coefficients themselves approach a constant magnitude.
        assert!(coeffs.c(n).abs() < 20.0, "c_{n} = {}", coeffs.c(n));
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(cr3bp_model::solve_gamma(LibrationPoint::L1, 0.0).is_err());
    assert!(cr3bp_model::solve_gamma(LibrationPoint::L1, 0.7).is_err());
    assert!(ProblemSpec::new(LibrationPoint::L1, MU_EARTH_MOON, 3).is_err());
    assert!(ProblemSpec::new(LibrationPoint::L1, -0.1, 8).is_err());
    // A state on top of a primary has no finite energy.
    let collision = SynodicState { x: MU_EARTH_MOON, ..Default::default() };
    assert!(cr3bp_model::synodic_energy(MU_EARTH_MOON, &collision).is_err());
}

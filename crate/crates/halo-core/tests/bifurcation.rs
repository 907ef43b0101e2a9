//! Integration tests for the detuning-series thresholds and their
//! independent Floquet cross-check, the reduced resonant dynamics, the
//! variational frequencies, and the synodic seed construction.

use halo_core::bifurcation::{
    self, first_order_thresholds, floquet_data, floquet_thresholds, halo_initial_conditions,
    small_mu_threshold_series, threshold_series, variational_info, FloquetBranch,
    ReducedCoeffs, ThresholdKind, ThresholdSeries,
};
use halo_core::cr3bp_model::{self, LibrationPoint};
use halo_core::normal_form::{compute_normal_form, NormalFormOptions, NormalFormResult};

const MU_EARTH_MOON: f64 = 0.01215058;

fn pipeline(point: LibrationPoint, mu: f64, order: u32) -> NormalFormResult {
    compute_normal_form(point, mu, order, None, &NormalFormOptions::default()).unwrap()
}

#[test]
fn first_order_actions_match_their_closed_forms() {
    let result = pipeline(LibrationPoint::L1, MU_EARTH_MOON, 1);
    let cm = &result.cm;
    let (a, b, s, t, d) = (cm.alpha, cm.beta, cm.sigma, cm.tau, cm.delta);
    let expected = [
        (ThresholdKind::HaloY, d / (s - 2.0 * (a + t))),
        (ThresholdKind::AntihaloY, d / (s - 2.0 * (a - t))),
        (ThresholdKind::HaloZ, d / (2.0 * b - s + 2.0 * t)),
        (ThresholdKind::AntihaloZ, d / (2.0 * b - s - 2.0 * t)),
    ];
    for (kind, closed_form) in expected {
        let series = threshold_series(cm, &result.geometry, kind, 1).unwrap();
        assert!(
            (series.e_cal - closed_form).abs() <= 1e-12 * closed_form.abs(),
            "{kind}: {} vs closed form {closed_form}",
            series.e_cal
        );
    }
}

#[test]
fn energy_series_composes_frequency_detuning_and_quartic_terms() {
    let result = pipeline(LibrationPoint::L2, MU_EARTH_MOON, 2);
    let cm = &result.cm;

    // At first order only the resonant frequency contributes: E = omega_z C1 delta.
    let first = threshold_series(cm, &result.geometry, ThresholdKind::HaloY, 1).unwrap();
    assert!((first.e_local - cm.omega_z * first.e_cal).abs() <= 1e-12);
    let e_phys = cr3bp_model::to_physical_energy(&result.geometry, first.e_local);
    assert!((first.e_phys - e_phys).abs() <= 1e-12);

    // The delta^2 coefficient picks up the detuning shift (delta counts as
    // one order) and the quartic branch coefficient:
    // C_hat_2 = omega_z C2 + C1 + alpha C1^2.
    let second = threshold_series(cm, &result.geometry, ThresholdKind::HaloY, 2).unwrap();
    let c1 = second.c[0];
    let c2 = second.c[1];
    let expected = cm.omega_z * c2 + c1 + cm.alpha * c1 * c1;
    assert!(
        (second.c_hat[1] - expected).abs() <= 1e-12 * expected.abs().max(1.0),
        "C_hat_2 = {} vs composed {expected}",
        second.c_hat[1]
    );
}

#[test]
fn second_order_action_matches_its_closed_form() {
    let result = pipeline(LibrationPoint::L1, MU_EARTH_MOON, 2);
    let cm = &result.cm;
    let s = cm.sigma - 2.0 * (cm.alpha + cm.tau);
    let e1 = cm.delta / s;
    // Solving delta + f2 E + f3 E^2 = 0 perturbatively gives the quadratic
    // correction -f3 / f2^3 with f2 = -S and f3 the sextic combination.
    let correction =
        -(cm.alpha2211 - 3.0 * cm.alpha3300 - 2.0 * cm.alpha3102) / s.powi(3) * cm.delta.powi(2);
    let series = threshold_series(cm, &result.geometry, ThresholdKind::HaloY, 2).unwrap();
    let expected = e1 + correction;
    assert!(
        (series.e_cal - expected).abs() <= 1e-10 * expected.abs(),
        "order-2 action {} vs closed form {expected}",
        series.e_cal
    );
}

#[test]
fn floquet_route_reproduces_series_actions() {
    // The determinant-root route never consults the series solver; the two
    // must agree to roundoff at first order. A broader randomized sweep
    // runs in the acceptance suite.
    let cases = [
        (LibrationPoint::L1, 3.0404326e-6),
        (LibrationPoint::L1, MU_EARTH_MOON),
        (LibrationPoint::L1, 0.5),
        (LibrationPoint::L2, 1e-3),
        (LibrationPoint::L2, 0.5),
        (LibrationPoint::L3, MU_EARTH_MOON),
        (LibrationPoint::L3, 0.3),
    ];
    for (point, mu) in cases {
        let result = pipeline(point, mu, 1);
        let quartet = floquet_thresholds(&result.cm).unwrap();
        let series = first_order_thresholds(&result.cm, &result.geometry).unwrap();
        let pairs = [
            (quartet.ly, &series[0]),
            (quartet.iy, &series[1]),
            (quartet.lz, &series[2]),
            (quartet.iz, &series[3]),
        ];
        for (root, thr) in pairs {
            let rel = (root - thr.e_cal).abs() / thr.e_cal.abs();
            assert!(
                rel <= 1e-14,
                "{point:?} mu={mu} {}: floquet {root} vs series {} (rel {rel:.3e})",
                thr.kind,
                thr.e_cal
            );
        }
    }
}

#[test]
fn monodromy_trace_reaches_two_exactly_at_the_threshold() {
    let result = pipeline(LibrationPoint::L1, MU_EARTH_MOON, 1);
    let quartet = floquet_thresholds(&result.cm).unwrap();
    let at_threshold = floquet_data(&result.cm, FloquetBranch::Horizontal, quartet.ly);
    assert!(at_threshold.lambda.norm() <= 1e-7, "lambda {}", at_threshold.lambda);
    assert!(
        (at_threshold.monodromy_trace - 2.0).abs() <= 1e-10,
        "trace {}",
        at_threshold.monodromy_trace
    );
    // Slightly inside the critical action the branch is already away from
    // the bifurcation value.
    let inside = floquet_data(&result.cm, FloquetBranch::Horizontal, 0.5 * quartet.ly);
    assert!((inside.monodromy_trace - 2.0).abs() > 1e-4);
}

#[test]
fn variational_frequency_reduces_to_the_detuning_at_zero_action() {
    for (point, mu) in [(LibrationPoint::L1, MU_EARTH_MOON), (LibrationPoint::L2, 0.5)] {
        let result = pipeline(point, mu, 1);
        let info = variational_info(&result.cm, 0.0).unwrap();
        assert!(
            (info.kappa_y_hnm.re - result.cm.delta).abs() <= 1e-12
                && info.kappa_y_hnm.im.abs() <= 1e-12,
            "{point:?}: kappa(0) = {} vs delta {}",
            info.kappa_y_hnm,
            result.cm.delta
        );
        assert!((info.kappa_y_first - result.cm.omega_y).abs() <= 1e-12);
    }
}

#[test]
fn variational_frequency_is_imaginary_inside_the_unstable_window() {
    let result = pipeline(LibrationPoint::L1, MU_EARTH_MOON, 1);
    let quartet = floquet_thresholds(&result.cm).unwrap();
    // Between the halo and anti-halo planar thresholds the normal mode is
    // unstable: kappa^2 < 0.
    let mid = 0.5 * (quartet.ly + quartet.iy);
    let info = variational_info(&result.cm, mid).unwrap();
    assert!(info.kappa_y_hnm.re.abs() <= 1e-12 && info.kappa_y_hnm.im.abs() > 0.0);
}

#[test]
fn total_action_is_conserved_by_the_reduced_flow() {
    let result = pipeline(LibrationPoint::L2, MU_EARTH_MOON, 2);
    let samples = [
        [0.02, 0.01, 0.3, -1.2],
        [0.005, 0.03, 2.0, 0.7],
        [0.04, 0.0, -0.4, 0.0],
        [0.0, 0.025, 0.0, 2.9],
    ];
    for state in samples {
        let dot = bifurcation::action_angle_vector_field(&result.cm, state);
        let scale = dot.iter().map(|v| v.abs()).fold(1.0, f64::max);
        assert!(
            (dot[0] + dot[1]).abs() <= 1e-12 * scale,
            "dIy + dIz = {:.3e} at {state:?}",
            dot[0] + dot[1]
        );
    }
}

#[test]
fn reduced_vector_field_is_hamiltonian() {
    let result = pipeline(LibrationPoint::L1, MU_EARTH_MOON, 1);
    let rc = ReducedCoeffs::from_cm(&result.cm);
    let (e, r, psi) = (0.05, 0.02, 0.8);
    let h = 1e-6;
    let [r_dot, psi_dot, nu_dot] = rc.vector_field(e, r, psi);
    let dk_dpsi = (rc.hamiltonian(e, r, psi + h) - rc.hamiltonian(e, r, psi - h)) / (2.0 * h);
    let dk_dr = (rc.hamiltonian(e, r + h, psi) - rc.hamiltonian(e, r - h, psi)) / (2.0 * h);
    let dk_de = (rc.hamiltonian(e + h, r, psi) - rc.hamiltonian(e - h, r, psi)) / (2.0 * h);
    assert!((r_dot + dk_dpsi).abs() <= 1e-8, "r_dot {} vs -dK/dpsi {}", r_dot, -dk_dpsi);
    assert!((psi_dot - dk_dr).abs() <= 1e-8);
    // The conjugate angle of the conserved total action rotates with dK/dE.
    assert!((nu_dot - dk_de).abs() <= 1e-8);
}

#[test]
fn seed_conditions_sit_on_the_planar_branch() {
    let result = pipeline(LibrationPoint::L1, MU_EARTH_MOON, 2);
    let seed = halo_initial_conditions(&result).unwrap();
    let thr = threshold_series(&result.cm, &result.geometry, ThresholdKind::HaloY, 1).unwrap();

    assert!((seed.action - thr.e_cal).abs() <= 1e-12);
    // The seed energy carries the full normal form, the series threshold
    // its truncation; they agree to the neglected orders.
    assert!(
        (seed.energy_phys - thr.e_phys).abs() <= 1e-3,
        "seed {} vs threshold {}",
        seed.energy_phys,
        thr.e_phys
    );
    assert!(
        (cr3bp_model::to_physical_energy(&result.geometry, seed.energy_local)
            - seed.energy_phys)
            .abs()
            <= 1e-12
    );
    // Perpendicular crossing inside the libration region.
    let offset = (seed.x0 - result.geometry.x_position()).abs();
    assert!(offset > 0.0 && offset < result.geometry.gamma);
    assert!(seed.ydot0.abs() > 0.0);
    assert!((seed.theta - std::f64::consts::FRAC_PI_2).abs() < 0.5);
}

#[test]
fn small_mass_ratio_series_matches_the_pipeline() {
    // L1/L2 at mu = 1e-6 (series in mu^(1/3)), L3 at mu = 1e-4 (series in
    // mu); the printed constants carry six digits.
    for (point, mu, tol) in [
        (LibrationPoint::L1, 1e-6, 1e-4),
        (LibrationPoint::L2, 1e-6, 1e-4),
        (LibrationPoint::L3, 1e-4, 1e-3),
    ] {
        let result = pipeline(point, mu, 1);
        let thr =
            threshold_series(&result.cm, &result.geometry, ThresholdKind::HaloY, 1).unwrap();
        let series = small_mu_threshold_series(point, mu);
        let rel = (thr.e_local - series).abs() / series.abs();
        assert!(
            rel <= tol,
            "{point:?} mu={mu}: pipeline {} vs series {series} (rel {rel:.3e})",
            thr.e_local
        );
    }
}

#[test]
fn threshold_order_is_validated() {
    let result = pipeline(LibrationPoint::L1, MU_EARTH_MOON, 2);
    assert!(threshold_series(&result.cm, &result.geometry, ThresholdKind::HaloY, 0).is_err());
    assert!(threshold_series(&result.cm, &result.geometry, ThresholdKind::HaloY, 3).is_err());
    assert!(threshold_series(&result.cm, &result.geometry, ThresholdKind::HaloY, 2).is_ok());
}

#[test]
fn threshold_series_serializes_round_trip() {
    let result = pipeline(LibrationPoint::L3, MU_EARTH_MOON, 2);
    let thr = threshold_series(&result.cm, &result.geometry, ThresholdKind::AntihaloZ, 2).unwrap();
    let json = serde_json::to_string(&thr).unwrap();
    let back: ThresholdSeries = serde_json::from_str(&json).unwrap();
    assert_eq!(thr, back);
}

#[test]
fn quartet_helper_matches_individual_series() {
    let result = pipeline(LibrationPoint::L2, 0.5, 1);
    let quartet = first_order_thresholds(&result.cm, &result.geometry).unwrap();
    let kinds = [
        ThresholdKind::HaloY,
        ThresholdKind::AntihaloY,
        ThresholdKind::HaloZ,
        ThresholdKind::AntihaloZ,
    ];
    for (thr, kind) in quartet.iter().zip(kinds) {
        let single = threshold_series(&result.cm, &result.geometry, kind, 1).unwrap();
        assert_eq!(thr.kind, kind);
        assert_eq!(thr.e_phys, single.e_phys);
    }
}

//! Integration tests for the resonant normalization chain: golden
//! centre-manifold coefficients, structural invariants of the normal form,
//! serialization, and independence from the expansion-degree cap.

use halo_core::cr3bp_model::LibrationPoint;
use halo_core::normal_form::{
    self, appendix_series, compute_normal_form, is_kernel_monomial, CmSeriesKind,
    NormalFormOptions, ResonantNormalForm,
};
use halo_core::poly_algebra::poisson_bracket;

const MU_EARTH_MOON: f64 = 0.01215058;

fn options() -> NormalFormOptions {
    NormalFormOptions::default()
}

/// Golden quartic and sextic centre-manifold coefficients, frozen from the
/// pipeline after it was validated against closed-form limits and the
/// independent numerical continuation. Guards against silent regressions.
#[test]
fn golden_centre_manifold_coefficients_l1_earth_moon() {
    let result =
        compute_normal_form(LibrationPoint::L1, MU_EARTH_MOON, 2, None, &options()).unwrap();
    let cm = &result.cm;
    let golden = [
        (cm.omega_y, 2.3343858413),
        (cm.omega_z, 2.2688310502),
        (cm.delta, 0.0655547911),
        (cm.alpha, -0.16210137),
        (cm.beta, -0.14488251),
        (cm.sigma, -0.07261490),
        (cm.tau, -0.11653530),
        (cm.alpha3300, -0.01326986),
        (cm.alpha0033, -0.00842719),
        (cm.alpha2211, -0.00294966),
        (cm.alpha1122, -0.00230649),
        (cm.alpha3102, -0.01587333),
        (cm.alpha2013, -0.01378529),
    ];
    for (value, expected) in golden {
        assert!(
            (value - expected).abs() <= 5e-9,
            "coefficient {value:.10} vs frozen {expected:.10}"
        );
    }
}

#[test]
fn golden_centre_manifold_coefficients_l2_equal_masses() {
    let result = compute_normal_form(LibrationPoint::L2, 0.5, 2, None, &options()).unwrap();
    let cm = &result.cm;
    let golden = [
        (cm.omega_y, 1.3288697684),
        (cm.omega_z, 1.2529112147),
        (cm.delta, 0.0759585538),
        (cm.alpha, -0.02624960),
        (cm.beta, -0.00185851),
        (cm.sigma, 0.07466689),
        (cm.tau, -0.05026238),
        (cm.alpha3300, -0.01401702),
        (cm.alpha0033, -0.00324767),
    ];
    for (value, expected) in golden {
        assert!(
            (value - expected).abs() <= 5e-9,
            "coefficient {value:.10} vs frozen {expected:.10}"
        );
    }
}

#[test]
fn normalized_slots_contain_only_kernel_monomials() {
    let result =
        compute_normal_form(LibrationPoint::L1, MU_EARTH_MOON, 3, None, &options()).unwrap();
    let nf = &result.normal_form;
    for degree in 3..=nf.max_degree {
        for (ev, c) in nf.k.to_polynomial().degree_terms(degree) {
            assert!(
                is_kernel_monomial(&ev),
                "non-kernel monomial {ev:?} with coefficient {c} at degree {degree}"
            );
        }
    }
}

#[test]
fn homological_residuals_are_negligible() {
    for point in [LibrationPoint::L1, LibrationPoint::L2, LibrationPoint::L3] {
        let result = compute_normal_form(point, MU_EARTH_MOON, 4, None, &options()).unwrap();
        for &(degree, residual) in &result.normal_form.residuals {
            assert!(
                residual <= 1e-10,
                "{point:?} degree {degree}: residual {residual:.3e}"
            );
        }
    }
}

#[test]
fn normal_form_commutes_with_the_resonant_quadratic() {
    // The kernel structure makes K Poisson-commute with the exactly
    // resonant quadratic (equal elliptic frequencies); the detuning part
    // is the retained perturbation and does not commute.
    let result =
        compute_normal_form(LibrationPoint::L1, MU_EARTH_MOON, 3, None, &options()).unwrap();
    let h2 = halo_core::linearization::h2_resonant(&result.quadratic);
    let k = result.normal_form.k.to_polynomial();
    let commutator = poisson_bracket(&h2, &k, None).unwrap();
    let rel = commutator.norm() / k.norm().max(1.0);
    assert!(rel <= 1e-14, "{{H2_res, K}} norm {rel:.3e}");
}

#[test]
fn serialization_round_trips_exactly() {
    let result =
        compute_normal_form(LibrationPoint::L2, MU_EARTH_MOON, 2, None, &options()).unwrap();
    let json = result.normal_form.to_json();
    let back = ResonantNormalForm::from_json(&json).unwrap();
    assert_eq!(back.order, result.normal_form.order);
    assert_eq!(back.max_degree, result.normal_form.max_degree);
    let a = result.normal_form.k.to_polynomial();
    let b = back.k.to_polynomial();
    assert_eq!(a.num_terms(), b.num_terms());
    for (ev, c) in a.terms() {
        assert_eq!(b.coefficient(ev.0), c, "coefficient drift at {ev:?}");
    }
    assert_eq!(back.generators.len(), result.normal_form.generators.len());
    // Tampering with the version must be rejected.
    let bad = json.replace("\"schema_version\":1", "\"schema_version\":99");
    assert!(ResonantNormalForm::from_json(&bad).is_err());
}

#[test]
fn results_do_not_depend_on_the_degree_cap() {
    // Normalizing through order 3 needs degree 8; carrying extra expansion
    // degrees must not change any produced coefficient.
    let lean =
        compute_normal_form(LibrationPoint::L1, MU_EARTH_MOON, 3, Some(8), &options()).unwrap();
    let rich =
        compute_normal_form(LibrationPoint::L1, MU_EARTH_MOON, 3, Some(12), &options()).unwrap();
    for term in &lean.cm.table {
        let other = rich.cm.coefficient(term.iy, term.iz, term.m);
        assert!(
            (term.value - other).abs() <= 1e-12 * term.value.abs().max(1.0),
            "({}, {}, {}): {} vs {}",
            term.iy,
            term.iz,
            term.m,
            term.value,
            other
        );
    }
}

#[test]
fn vertical_frequency_squares_to_c2() {
    let result =
        compute_normal_form(LibrationPoint::L3, MU_EARTH_MOON, 1, None, &options()).unwrap();
    let qd = &result.quadratic;
    assert!((qd.omega_z * qd.omega_z - qd.c2).abs() <= 1e-14);
    assert!(qd.delta > 0.0, "detuning must be positive at every collinear point");
}

#[test]
fn small_mass_ratio_limits_match_the_reference_series() {
    // Spot checks of the closed-form limiting series against the computed
    // pipeline at a small mass ratio (the acceptance suite fits the full
    // slope structure; this guards the wiring).
    let mu = 1e-6;
    for point in [LibrationPoint::L1, LibrationPoint::L2] {
        let result = compute_normal_form(point, mu, 2, None, &options()).unwrap();
        for (kind, value) in [
            (CmSeriesKind::Delta, result.cm.delta),
            (CmSeriesKind::OmegaZ, result.cm.omega_z),
            (CmSeriesKind::Alpha, result.cm.alpha),
            (CmSeriesKind::Tau, result.cm.tau),
        ] {
            let series = appendix_series(point, kind, mu);
            let rel = (value - series).abs() / series.abs();
            assert!(
                rel <= 1e-2,
                "{point:?} {kind:?}: computed {value:.8} vs series {series:.8} (rel {rel:.2e})"
            );
        }
    }
}

#[test]
fn order_zero_and_excessive_orders_are_rejected() {
    assert!(compute_normal_form(LibrationPoint::L1, MU_EARTH_MOON, 0, None, &options()).is_err());
    // A degree cap below the requested order cannot work either.
    assert!(
        compute_normal_form(LibrationPoint::L1, MU_EARTH_MOON, 4, Some(6), &options()).is_err()
    );
}

#[test]
fn reduction_rejects_tampered_normal_forms() {
    // Injecting a non-kernel term with a large imaginary amplitude into the
    // normal form must trip the reality guard of the reduction.
    let result =
        compute_normal_form(LibrationPoint::L1, MU_EARTH_MOON, 2, None, &options()).unwrap();
    let mut broken = result.normal_form.clone();
    let mut poly = broken.k.to_polynomial();
    let scale = poly.degree_norm(4);
    poly.add_term(
        halo_core::poly_algebra::ExponentVector([0, 2, 0, 0, 0, 2]),
        num_complex::Complex64::new(0.0, scale),
    );
    broken.k = halo_core::poly_algebra::GradedSeries::from_polynomial(&poly, broken.max_degree);
    assert!(normal_form::center_manifold_reduce(&broken).is_err());
}

//! Integration tests for the norm-growth diagnostics of the normal-form
//! series: report structure, ratio bookkeeping, CSV output, and the
//! qualitative divergence contrast between the inner points and L3.

use halo_core::cr3bp_model::LibrationPoint;
use halo_core::diagnostics::{convergence_report, write_csv};
use halo_core::normal_form::{compute_normal_form, NormalFormOptions};

const MU_EARTH_MOON: f64 = 0.01215058;

#[test]
fn report_layout_matches_the_computed_orders() {
    let result =
        compute_normal_form(LibrationPoint::L1, MU_EARTH_MOON, 4, None, &NormalFormOptions::default())
            .unwrap();
    let report = convergence_report(&result).unwrap();
    let degrees: Vec<u32> = report.rows.iter().map(|r| r.degree).collect();
    assert_eq!(degrees, vec![4, 6, 8, 10]);
    for (i, row) in report.rows.iter().enumerate() {
        assert_eq!(row.order, (row.degree - 2) / 2);
        assert!(row.cm_norm > 0.0 && row.cm_norm.is_finite());
        assert!(row.root > 0.0);
        assert!(row.weighted > 0.0);
        if i == 0 {
            assert!(row.ratio.is_none());
        } else {
            // ratio = sqrt(norm_n / norm_{n-2}) against the previous row.
            let expected = (row.cm_norm / report.rows[i - 1].cm_norm).sqrt();
            let ratio = row.ratio.unwrap();
            assert!((ratio - expected).abs() <= 1e-12 * expected);
        }
    }
    assert!(report.reference_action > 0.0);
    assert!((1..=4).contains(&report.optimal_order));
    assert!(report.radius_estimate.is_some());
}

#[test]
fn csv_output_has_one_line_per_row_plus_header() {
    let result =
        compute_normal_form(LibrationPoint::L2, MU_EARTH_MOON, 3, None, &NormalFormOptions::default())
            .unwrap();
    let report = convergence_report(&result).unwrap();
    let mut buffer = Vec::new();
    write_csv(&report, &mut buffer).unwrap();
    let text = String::from_utf8(buffer).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "degree,order,cm_norm,root,ratio,weighted");
    assert_eq!(lines.len(), 1 + report.rows.len());
    // First data row has an empty ratio cell.
    assert_eq!(lines[1].split(',').count(), 6);
    assert_eq!(lines[1].split(',').nth(4), Some(""));
}

#[test]
fn l3_norms_grow_faster_than_l1_at_matching_orders() {
    // The qualitative acceptance picture: at the Earth-Moon mass ratio the
    // L3 series norms blow up while L1 stays tame. Compare the last
    // available growth ratios at order 4 (the full degree-14 contrast runs
    // in the acceptance suite).
    let opts = NormalFormOptions::default();
    let l1 = convergence_report(
        &compute_normal_form(LibrationPoint::L1, MU_EARTH_MOON, 4, None, &opts).unwrap(),
    )
    .unwrap();
    let l3 = convergence_report(
        &compute_normal_form(LibrationPoint::L3, MU_EARTH_MOON, 4, None, &opts).unwrap(),
    )
    .unwrap();
    let last_ratio = |rows: &[halo_core::diagnostics::ConvergenceRow]| {
        rows.last().unwrap().ratio.unwrap()
    };
    assert!(
        last_ratio(&l3.rows) > 2.0 * last_ratio(&l1.rows),
        "L3 ratio {} vs L1 ratio {}",
        last_ratio(&l3.rows),
        last_ratio(&l1.rows)
    );
    // L3 ratios increase monotonically from degree 6 on.
    let ratios: Vec<f64> = l3.rows.iter().filter_map(|r| r.ratio).collect();
    for pair in ratios.windows(2) {
        assert!(pair[1] > pair[0], "L3 ratios not increasing: {ratios:?}");
    }
}

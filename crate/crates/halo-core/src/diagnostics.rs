//! Convergence diagnostics for the centre-manifold normal form.
//!
//! The normal-form series is asymptotic: truncating at successively higher
//! degrees first improves, then degrades the thresholds. The standard probe
//! is the growth of the centre-manifold restriction of each homogeneous
//! slice. This module tabulates those norms, their degree-th roots and
//! successive ratios (an inverse radius-of-convergence estimate in the
//! action), and a heuristic optimal truncation order that minimizes the
//! size of the first neglected term at the first-order halo threshold.

use crate::bifurcation::{self, BifurcationError, ThresholdKind};
use crate::normal_form::NormalFormResult;
use serde::{Deserialize, Serialize};
use std::io;

/// One even-degree row of the convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    /// Homogeneous degree of the slice.
    pub degree: u32,
    /// Normal-form order the slice contributes at (`degree / 2 - 1`).
    pub order: u32,
    /// One-norm of the slice restricted to the centre manifold.
    pub cm_norm: f64,
    /// Degree-th root of the restricted norm.
    pub root: f64,
    /// Square root of the norm ratio to the previous even slice
    /// (an inverse action-radius estimate); absent for the first row.
    pub ratio: Option<f64>,
    /// Norm weighted by the reference action to the slice degree,
    /// `cm_norm * e_ref^degree`.
    pub weighted: f64,
}

/// Convergence table of a computed normal form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Rows for even degrees `4, 6, ..., max_degree`.
    pub rows: Vec<ConvergenceRow>,
    /// Reference action used for the weighted column (first-order halo
    /// threshold).
    pub reference_action: f64,
    /// Heuristic optimal truncation order (argmin of the weighted column).
    pub optimal_order: u32,
    /// Action-radius estimate from the last ratio (`1 / ratio`), if any.
    pub radius_estimate: Option<f64>,
}

/// Sum of coefficient magnitudes of slice `n` restricted to the centre
/// manifold (hyperbolic exponents zero).
fn cm_restricted_norm(result: &NormalFormResult, degree: u32) -> f64 {
    result
        .normal_form
        .k
        .slot(degree)
        .terms()
        .filter(|(e, _)| e.exponent(0) == 0 && e.exponent(3) == 0)
        .map(|(_, c)| c.norm())
        .sum()
}

/// Builds the convergence table for a computed normal form.
pub fn convergence_report(result: &NormalFormResult) -> Result<ConvergenceReport, BifurcationError> {
    let ts = bifurcation::threshold_series(
        &result.cm,
        &result.geometry,
        ThresholdKind::HaloY,
        1,
    )?;
    let e_ref = ts.e_cal;

    let mut rows = Vec::new();
    let mut previous: Option<f64> = None;
    let mut degree = 4;
    while degree <= result.normal_form.max_degree {
        let cm_norm = cm_restricted_norm(result, degree);
        let root = if cm_norm > 0.0 { cm_norm.powf(1.0 / f64::from(degree)) } else { 0.0 };
        let ratio = previous.and_then(|p| {
            (p > 0.0 && cm_norm > 0.0).then(|| (cm_norm / p).sqrt())
        });
        let weighted = cm_norm * e_ref.powi(degree as i32);
        rows.push(ConvergenceRow {
            degree,
            order: degree / 2 - 1,
            cm_norm,
            root,
            ratio,
            weighted,
        });
        previous = Some(cm_norm);
        degree += 2;
    }

    let optimal_order = rows
        .iter()
        .filter(|r| r.weighted > 0.0)
        .min_by(|x, y| x.weighted.total_cmp(&y.weighted))
        .map(|r| r.order)
        .unwrap_or(1);
    let radius_estimate = rows.last().and_then(|r| r.ratio).map(|q| 1.0 / q);
    Ok(ConvergenceReport { rows, reference_action: e_ref, optimal_order, radius_estimate })
}

/// Writes the table as CSV with a header row; floating-point fields use a
/// fixed `{:.8e}` format so output is byte-stable across runs.
pub fn write_csv<W: io::Write>(report: &ConvergenceReport, mut out: W) -> io::Result<()> {
    writeln!(out, "degree,order,cm_norm,root,ratio,weighted")?;
    for r in &report.rows {
        let ratio = r.ratio.map(|q| format!("{q:.8e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{:.8e},{:.8e},{},{:.8e}",
            r.degree, r.order, r.cm_norm, r.root, ratio, r.weighted
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_is_stable() {
        let report = ConvergenceReport {
            rows: vec![
                ConvergenceRow {
                    degree: 4,
                    order: 1,
                    cm_norm: 1.5,
                    root: 1.1067,
                    ratio: None,
                    weighted: 0.1,
                },
                ConvergenceRow {
                    degree: 6,
                    order: 2,
                    cm_norm: 4.5,
                    root: 1.285,
                    ratio: Some(1.732),
                    weighted: 0.05,
                },
            ],
            reference_action: 0.2,
            optimal_order: 2,
            radius_estimate: Some(0.577),
        };
        let mut buf = Vec::new();
        write_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("degree,order,cm_norm,root,ratio,weighted"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("4,1,1.50000000e0,"));
        assert!(row.contains(",,")); // missing ratio stays empty
    }
}

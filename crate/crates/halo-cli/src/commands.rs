//! Implementations of the five subcommands.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use halo_core::bifurcation::{first_order_thresholds, halo_initial_conditions, threshold_series, ThresholdKind};
use halo_core::diagnostics::{convergence_report, write_csv};
use halo_core::LibrationPoint;
use halo_oracle::{lyapunov_family, numerical_threshold, FamilyOptions, IntegratorConfig};

use crate::args::{
    Command, DiagnoseArgs, Format, GridArgs, InitConditionsArgs, ScanArgs, Spacing, ThresholdArgs,
    VerifyArgs,
};
use crate::cache::NormalFormCache;
use crate::sink::{sig9, write_output};

/// Version stamp carried by every JSON report.
const JSON_SCHEMA_VERSION: u32 = 1;

/// Normalization scheme label carried by reports.
const METHOD: &str = "DM";

/// Dispatches one parsed command.
pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Threshold(args) => cmd_threshold(args),
        Command::Scan(args) => cmd_scan(args),
        Command::InitConditions(args) => cmd_init_conditions(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

/// Builds the mass-ratio grid for `scan` and `init-conditions`.
fn mu_grid(args: &GridArgs) -> Result<Vec<f64>> {
    if !(args.mu_min > 0.0 && args.mu_min <= args.mu_max && args.mu_max <= 0.5) {
        bail!(
            "mass-ratio range must satisfy 0 < mu-min <= mu-max <= 0.5 (got {:e} .. {:e})",
            args.mu_min,
            args.mu_max
        );
    }
    if args.count == 0 {
        bail!("grid needs at least one point");
    }
    if args.count == 1 {
        return Ok(vec![args.mu_min]);
    }
    let n = (args.count - 1) as f64;
    Ok((0..args.count)
        .map(|i| {
            let t = i as f64 / n;
            match args.spacing {
                Spacing::Log => (args.mu_min.ln() + t * (args.mu_max.ln() - args.mu_min.ln())).exp(),
                Spacing::Linear => args.mu_min + t * (args.mu_max - args.mu_min),
            }
        })
        .collect())
}

#[derive(Debug, Serialize)]
struct OrderRow {
    order: u32,
    e_cal: f64,
    e_local: f64,
    e_phys: f64,
}

#[derive(Debug, Serialize)]
struct Quartet {
    ly: f64,
    iy: f64,
    lz: f64,
    iz: f64,
}

#[derive(Debug, Serialize)]
struct ThresholdReport {
    schema_version: u32,
    method: &'static str,
    point: LibrationPoint,
    mu: f64,
    order: u32,
    degree: u32,
    rows: Vec<OrderRow>,
    e_cal: f64,
    e_local: f64,
    e_phys: f64,
    /// First-order physical thresholds of the four families.
    thresholds: Quartet,
}

/// Computes the threshold report for one (point, mu, order, degree) request.
fn threshold_report(
    cache: &NormalFormCache,
    point: LibrationPoint,
    mu: f64,
    order: u32,
    degree: Option<u32>,
) -> Result<ThresholdReport> {
    let result = cache.compute(point, mu, order, degree)?;
    let mut rows = Vec::with_capacity(order as usize);
    for n in 1..=order {
        let t = threshold_series(&result.cm, &result.geometry, ThresholdKind::HaloY, n)?;
        rows.push(OrderRow { order: n, e_cal: t.e_cal, e_local: t.e_local, e_phys: t.e_phys });
    }
    let [ly, iy, lz, iz] = first_order_thresholds(&result.cm, &result.geometry)?;
    let (e_cal, e_local, e_phys) = {
        let last = rows.last().context("order must be at least 1")?;
        (last.e_cal, last.e_local, last.e_phys)
    };
    Ok(ThresholdReport {
        schema_version: JSON_SCHEMA_VERSION,
        method: METHOD,
        point,
        mu,
        order,
        degree: result.spec.expansion_degree,
        e_cal,
        e_local,
        e_phys,
        rows,
        thresholds: Quartet { ly: ly.e_phys, iy: iy.e_phys, lz: lz.e_phys, iz: iz.e_phys },
    })
}

fn cmd_threshold(args: &ThresholdArgs) -> Result<()> {
    let cache = NormalFormCache::from_env();
    let report = threshold_report(&cache, args.point.into(), args.mu, args.order, args.degree)?;
    let rendered = match args.format {
        Format::Text => {
            let mut out = String::new();
            out.push_str(&format!(
                "point {}  mu {}  order {}  degree {}  method {}\n",
                report.point,
                sig9(report.mu),
                report.order,
                report.degree,
                report.method,
            ));
            out.push_str("order  E_cal           E_local         E_phys\n");
            for row in &report.rows {
                out.push_str(&format!(
                    "{:<5}  {:<14}  {:<14}  {}\n",
                    row.order,
                    sig9(row.e_cal),
                    sig9(row.e_local),
                    sig9(row.e_phys)
                ));
            }
            let q = &report.thresholds;
            out.push_str(&format!(
                "first-order thresholds (E_phys): ly {}  iy {}  lz {}  iz {}\n",
                sig9(q.ly),
                sig9(q.iy),
                sig9(q.lz),
                sig9(q.iz)
            ));
            out
        }
        Format::Csv => {
            let mut out = String::from("kind,order,e_cal,e_local,e_phys\n");
            for row in &report.rows {
                out.push_str(&format!(
                    "ly,{},{},{},{}\n",
                    row.order,
                    sig9(row.e_cal),
                    sig9(row.e_local),
                    sig9(row.e_phys)
                ));
            }
            let q = &report.thresholds;
            for (kind, e_phys) in [("iy", q.iy), ("lz", q.lz), ("iz", q.iz)] {
                out.push_str(&format!("{kind},1,,,{}\n", sig9(e_phys)));
            }
            out
        }
        Format::Json => render_json(&report)?,
    };
    write_output(args.output.as_deref(), &rendered)
}

#[derive(Debug, Serialize)]
struct ScanRow {
    mu: f64,
    /// Order-N physical halo threshold (N is the scan order, default 2).
    halo: f64,
    /// First-order value of the same series.
    halo_first: f64,
    ly: f64,
    iy: f64,
    lz: f64,
    iz: f64,
    /// Failure description; empty for successful rows.
    reason: String,
}

#[derive(Debug, Serialize)]
struct ScanReport {
    schema_version: u32,
    method: &'static str,
    point: LibrationPoint,
    order: u32,
    rows: Vec<ScanRow>,
}

/// One scan row; failures are folded into a NaN row with a reason.
fn scan_row(
    cache: &NormalFormCache,
    point: LibrationPoint,
    mu: f64,
    order: u32,
    degree: Option<u32>,
) -> ScanRow {
    match threshold_report(cache, point, mu, order, degree) {
        Ok(report) => ScanRow {
            mu,
            halo: report.e_phys,
            halo_first: report.rows[0].e_phys,
            ly: report.thresholds.ly,
            iy: report.thresholds.iy,
            lz: report.thresholds.lz,
            iz: report.thresholds.iz,
            reason: String::new(),
        },
        Err(err) => ScanRow {
            mu,
            halo: f64::NAN,
            halo_first: f64::NAN,
            ly: f64::NAN,
            iy: f64::NAN,
            lz: f64::NAN,
            iz: f64::NAN,
            // Strip newlines and commas so the reason stays one CSV cell.
            reason: format!("{err:#}").replace(['\n', ','], ";"),
        },
    }
}

fn cmd_scan(args: &ScanArgs) -> Result<()> {
    let grid = mu_grid(&args.grid)?;
    let cache = NormalFormCache::from_env();
    let point: LibrationPoint = args.point.into();
    // Grid points are independent; rayon preserves index order in collect,
    // and rendering happens after the join, so output order never depends on
    // scheduling.
    let rows: Vec<ScanRow> = grid
        .par_iter()
        .map(|&mu| scan_row(&cache, point, mu, args.order, args.degree))
        .collect();
    let report =
        ScanReport { schema_version: JSON_SCHEMA_VERSION, method: METHOD, point, order: args.order, rows };
    let rendered = match args.format {
        Format::Csv => {
            let mut out = String::from("mu,halo,halo_first,ly,iy,lz,iz,reason\n");
            for r in &report.rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    sig9(r.mu),
                    sig9(r.halo),
                    sig9(r.halo_first),
                    sig9(r.ly),
                    sig9(r.iy),
                    sig9(r.lz),
                    sig9(r.iz),
                    r.reason
                ));
            }
            out
        }
        Format::Json => render_json(&report)?,
        Format::Text => {
            let mut out = format!(
                "point {}  order {}  method {}\nmu              halo            first-order     reason\n",
                report.point, report.order, report.method
            );
            for r in &report.rows {
                out.push_str(&format!(
                    "{:<14}  {:<14}  {:<14}  {}\n",
                    sig9(r.mu),
                    sig9(r.halo),
                    sig9(r.halo_first),
                    r.reason
                ));
            }
            out
        }
    };
    write_output(args.output.as_deref(), &rendered)
}

#[derive(Debug, Serialize)]
struct SeedRow {
    mu: f64,
    x0: f64,
    ydot0: f64,
    reason: String,
}

#[derive(Debug, Serialize)]
struct SeedReport {
    schema_version: u32,
    method: &'static str,
    point: LibrationPoint,
    order: u32,
    rows: Vec<SeedRow>,
}

fn cmd_init_conditions(args: &InitConditionsArgs) -> Result<()> {
    let grid = mu_grid(&args.grid)?;
    let cache = NormalFormCache::from_env();
    let point: LibrationPoint = args.point.into();
    let rows: Vec<SeedRow> = grid
        .par_iter()
        .map(|&mu| {
            let seed = cache
                .compute(point, mu, args.order, args.degree)
                .and_then(|result| halo_initial_conditions(&result).map_err(Into::into));
            match seed {
                Ok(seed) => SeedRow { mu, x0: seed.x0, ydot0: seed.ydot0, reason: String::new() },
                Err(err) => SeedRow {
                    mu,
                    x0: f64::NAN,
                    ydot0: f64::NAN,
                    reason: format!("{err:#}").replace(['\n', ','], ";"),
                },
            }
        })
        .collect();
    let report =
        SeedReport { schema_version: JSON_SCHEMA_VERSION, method: METHOD, point, order: args.order, rows };
    let rendered = match args.format {
        Format::Csv => {
            let mut out = String::from("mu,x0,ydot0,reason\n");
            for r in &report.rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    sig9(r.mu),
                    sig9(r.x0),
                    sig9(r.ydot0),
                    r.reason
                ));
            }
            out
        }
        Format::Json => render_json(&report)?,
        Format::Text => {
            let mut out = format!(
                "point {}  order {}  method {}\nmu              X0              Ydot0           reason\n",
                report.point, report.order, report.method
            );
            for r in &report.rows {
                out.push_str(&format!(
                    "{:<14}  {:<14}  {:<14}  {}\n",
                    sig9(r.mu),
                    sig9(r.x0),
                    sig9(r.ydot0),
                    r.reason
                ));
            }
            out
        }
    };
    write_output(args.output.as_deref(), &rendered)
}

#[derive(Debug, Serialize)]
struct DiagnoseReport {
    schema_version: u32,
    method: &'static str,
    point: LibrationPoint,
    mu: f64,
    order: u32,
    degree: u32,
    report: halo_core::diagnostics::ConvergenceReport,
}

fn cmd_diagnose(args: &DiagnoseArgs) -> Result<()> {
    let cache = NormalFormCache::from_env();
    let point: LibrationPoint = args.point.into();
    let result = cache.compute(point, args.mu, args.order, args.degree)?;
    let report = convergence_report(&result)?;
    let rendered = match args.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&report, &mut buf)?;
            String::from_utf8(buf).context("diagnostics CSV is not UTF-8")?
        }
        Format::Json => render_json(&DiagnoseReport {
            schema_version: JSON_SCHEMA_VERSION,
            method: METHOD,
            point,
            mu: args.mu,
            order: args.order,
            degree: result.spec.expansion_degree,
            report,
        })?,
        Format::Text => {
            let mut out = format!(
                "point {}  mu {}  order {}  degree {}\n",
                point,
                sig9(args.mu),
                args.order,
                result.spec.expansion_degree
            );
            out.push_str("degree  cm_norm         root            ratio           weighted\n");
            for r in &report.rows {
                let ratio = r.ratio.map(sig9).unwrap_or_default();
                out.push_str(&format!(
                    "{:<6}  {:<14}  {:<14}  {:<14}  {}\n",
                    r.degree,
                    sig9(r.cm_norm),
                    sig9(r.root),
                    ratio,
                    sig9(r.weighted)
                ));
            }
            out.push_str(&format!(
                "reference action {}  optimal order {}  radius estimate {}\n",
                sig9(report.reference_action),
                report.optimal_order,
                report.radius_estimate.map(sig9).unwrap_or_else(|| "n/a".to_string())
            ));
            out
        }
    };
    write_output(args.output.as_deref(), &rendered)
}

#[derive(Debug, Serialize)]
struct VerifyRow {
    order: u32,
    e_phys: f64,
    /// Analytic minus numerical physical threshold.
    delta: f64,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    schema_version: u32,
    method: &'static str,
    point: LibrationPoint,
    mu: f64,
    order: u32,
    numerical: f64,
    rows: Vec<VerifyRow>,
}

fn cmd_verify(args: &VerifyArgs) -> Result<()> {
    let cache = NormalFormCache::from_env();
    let point: LibrationPoint = args.point.into();
    let cfg = IntegratorConfig { rel_tol: args.rel_tol, abs_tol: args.abs_tol, ..Default::default() };
    let opts = FamilyOptions::default();
    if let Some(path) = args.dump_family.as_deref() {
        let family = lyapunov_family(point, args.mu, &cfg, &opts)?;
        let mut out = String::from("index,e_phys,period,x0,ydot0,stability_index\n");
        for (i, p) in family.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{},{},{},{}\n",
                sig9(p.energy),
                sig9(p.period),
                sig9(p.x0),
                sig9(p.ydot0),
                sig9(p.stability_index)
            ));
        }
        write_output(Some(path), &out)?;
    }
    let numerical = numerical_threshold(point, args.mu, &cfg, &opts)
        .with_context(|| format!("numerical threshold at {point}, mu = {:e}", args.mu))?;
    let analytic = threshold_report(&cache, point, args.mu, args.order, args.degree)?;
    let rows: Vec<VerifyRow> = analytic
        .rows
        .iter()
        .map(|r| VerifyRow { order: r.order, e_phys: r.e_phys, delta: r.e_phys - numerical })
        .collect();
    let report = VerifyReport {
        schema_version: JSON_SCHEMA_VERSION,
        method: METHOD,
        point,
        mu: args.mu,
        order: args.order,
        numerical,
        rows,
    };
    let rendered = match args.format {
        Format::Text => {
            let mut out = format!(
                "point {}  mu {}  numerical E_phys {}\n",
                report.point,
                sig9(report.mu),
                sig9(report.numerical)
            );
            out.push_str("order  E_phys          delta\n");
            for r in &report.rows {
                out.push_str(&format!(
                    "{:<5}  {:<14}  {}\n",
                    r.order,
                    sig9(r.e_phys),
                    sig9(r.delta)
                ));
            }
            out
        }
        Format::Csv => {
            let mut out = String::from("order,e_phys,numerical,delta\n");
            for r in &report.rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    r.order,
                    sig9(r.e_phys),
                    sig9(report.numerical),
                    sig9(r.delta)
                ));
            }
            out
        }
        Format::Json => render_json(&report)?,
    };
    write_output(args.output.as_deref(), &rendered)
}

/// Pretty JSON plus a trailing newline.
fn render_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).context("serializing report")?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::{GridArgs, Spacing};

    fn grid(min: f64, max: f64, count: usize, spacing: Spacing) -> GridArgs {
        GridArgs { mu_min: min, mu_max: max, count, spacing }
    }

    #[test]
    fn log_grid_hits_both_endpoints() {
        let g = mu_grid(&grid(1e-6, 0.5, 20, Spacing::Log)).unwrap();
        assert_eq!(g.len(), 20);
        assert!((g[0] - 1e-6).abs() < 1e-18);
        assert!((g[19] - 0.5).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn linear_grid_is_evenly_spaced() {
        let g = mu_grid(&grid(0.1, 0.5, 5, Spacing::Linear)).unwrap();
        assert_eq!(g.len(), 5);
        for (i, v) in g.iter().enumerate() {
            assert!((v - (0.1 + 0.1 * i as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_ranges_are_rejected() {
        assert!(mu_grid(&grid(0.0, 0.5, 5, Spacing::Log)).is_err());
        assert!(mu_grid(&grid(0.2, 0.1, 5, Spacing::Log)).is_err());
        assert!(mu_grid(&grid(0.1, 0.6, 5, Spacing::Log)).is_err());
        assert!(mu_grid(&grid(0.1, 0.5, 0, Spacing::Log)).is_err());
    }
}

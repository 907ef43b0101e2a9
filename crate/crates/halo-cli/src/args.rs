//! Command-line argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use halo_core::LibrationPoint;

/// Halo bifurcation thresholds at the collinear libration points of the
/// spatial circular restricted three-body problem.
///
/// The analytic route expands the Hamiltonian around a collinear point,
/// normalizes it around the 1:1 in-plane/out-of-plane resonance, and solves
/// the resulting existence condition as a series in the frequency detuning.
/// The `verify` subcommand cross-checks the result against a numerical
/// continuation of the planar Lyapunov family.
#[derive(Debug, Parser)]
#[command(name = "halo", version, about, max_term_width = 100)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Threshold energies at one (point, mass ratio): halo thresholds at
    /// orders 1..N plus the four first-order family thresholds.
    Threshold(ThresholdArgs),
    /// Scan a mass-ratio range; one row per mass ratio.
    Scan(ScanArgs),
    /// Seed initial conditions (mu, X0, Ydot0) for the bifurcating halo
    /// branch over a mass-ratio grid.
    InitConditions(InitConditionsArgs),
    /// Norm-growth diagnostics of the normal-form series.
    Diagnose(DiagnoseArgs),
    /// Cross-check series thresholds against the numerical family oracle.
    Verify(VerifyArgs),
}

/// Collinear point selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "verbatim")]
pub enum PointArg {
    /// Between the primaries.
    L1,
    /// Beyond the light primary.
    L2,
    /// Beyond the heavy primary.
    L3,
}

impl From<PointArg> for LibrationPoint {
    fn from(p: PointArg) -> Self {
        match p {
            PointArg::L1 => LibrationPoint::L1,
            PointArg::L2 => LibrationPoint::L2,
            PointArg::L3 => LibrationPoint::L3,
        }
    }
}

/// Output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Human-readable table.
    Text,
    /// Comma-separated values, nine significant digits.
    Csv,
    /// JSON with a schema version field.
    Json,
}

/// Grid spacing for mass-ratio ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    /// Logarithmic spacing.
    Log,
    /// Linear spacing.
    Linear,
}

/// Mass-ratio grid shared by `scan` and `init-conditions`.
#[derive(Debug, Args)]
pub struct GridArgs {
    /// Lower end of the mass-ratio range.
    #[arg(long, default_value_t = 1e-6)]
    pub mu_min: f64,
    /// Upper end of the mass-ratio range.
    #[arg(long, default_value_t = 0.5)]
    pub mu_max: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Grid spacing.
    #[arg(long, value_enum, default_value_t = Spacing::Log)]
    pub spacing: Spacing,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Libration point.
    #[arg(long, value_enum)]
    pub point: PointArg,
    /// Mass ratio in (0, 1/2].
    #[arg(long)]
    pub mu: f64,
    /// Series order N: powers of the frequency detuning kept.
    #[arg(long, default_value_t = 2)]
    pub order: u32,
    /// Expansion degree override (default 2N+2).
    #[arg(long)]
    pub degree: Option<u32>,
    /// Output format. CSV columns: kind,order,e_cal,e_local,e_phys with one
    /// row per order for the halo family (ly) and one first-order row for
    /// each of iy, lz, iz.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Libration point.
    #[arg(long, value_enum)]
    pub point: PointArg,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Series order for the main threshold column.
    #[arg(long, default_value_t = 2)]
    pub order: u32,
    /// Expansion degree override (default 2N+2).
    #[arg(long)]
    pub degree: Option<u32>,
    /// Output format. CSV columns: mu,halo,halo_first,ly,iy,lz,iz,reason
    /// where halo is the order-N physical threshold energy, halo_first its
    /// first-order value, ly/iy/lz/iz the four first-order family
    /// thresholds, and reason is empty unless the point failed (then all
    /// numeric fields are NaN).
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InitConditionsArgs {
    /// Libration point.
    #[arg(long, value_enum)]
    pub point: PointArg,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Series order of the underlying normal form.
    #[arg(long, default_value_t = 2)]
    pub order: u32,
    /// Expansion degree override (default 2N+2).
    #[arg(long)]
    pub degree: Option<u32>,
    /// Output format. CSV columns: mu,x0,ydot0,reason with synodic-frame
    /// crossing abscissa X0 and transverse velocity Ydot0; reason is empty
    /// unless the point failed (then numeric fields are NaN).
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Libration point.
    #[arg(long, value_enum)]
    pub point: PointArg,
    /// Mass ratio in (0, 1/2].
    #[arg(long)]
    pub mu: f64,
    /// Series order of the normal form to diagnose.
    #[arg(long, default_value_t = 6)]
    pub order: u32,
    /// Expansion degree override (default 2N+2).
    #[arg(long)]
    pub degree: Option<u32>,
    /// Output format. CSV columns: degree,order,cm_norm,root,ratio,weighted;
    /// the ratio cell is empty on the first row.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Libration point.
    #[arg(long, value_enum)]
    pub point: PointArg,
    /// Mass ratio in (0, 1/2].
    #[arg(long)]
    pub mu: f64,
    /// Highest series order to compare against the numerical value.
    #[arg(long, default_value_t = 5)]
    pub order: u32,
    /// Expansion degree override (default 2N+2).
    #[arg(long)]
    pub degree: Option<u32>,
    /// Relative tolerance of the adaptive integrator.
    #[arg(long, default_value_t = 1e-12)]
    pub rel_tol: f64,
    /// Absolute tolerance of the adaptive integrator.
    #[arg(long, default_value_t = 1e-12)]
    pub abs_tol: f64,
    /// Also dump the continued Lyapunov family as CSV to this path
    /// (columns: index,e_phys,period,x0,ydot0,stability_index).
    #[arg(long)]
    pub dump_family: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// True when the command's target point is L3; used to attach the
/// L3-specific hint to error reports.
pub fn targets_l3(command: &Command) -> bool {
    let point = match command {
        Command::Threshold(a) => a.point,
        Command::Scan(a) => a.point,
        Command::InitConditions(a) => a.point,
        Command::Diagnose(a) => a.point,
        Command::Verify(a) => a.point,
    };
    point == PointArg::L3
}

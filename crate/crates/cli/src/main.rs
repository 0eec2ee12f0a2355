//! `spcal` — reproducible sphere-plane electrostatic calibration pipelines.
//!
//! One binary, seven subcommands: surface profiles, force-gradient curves,
//! synthetic calibration campaigns, parabola calibration, power-law
//! exponent fits, independent electrostatic oracles, and geometry scans.
//! Every command is deterministic given its flags, config, and seed, and
//! reruns produce byte-identical output files.
//!
//! Exit codes: 0 success, 2 usage/config/domain error, 3 numeric failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use config::{merge_options, FileConfig};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SPCAL_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "spcal",
    version,
    about = "Sphere-plane electrostatic calibration toolkit",
    propagate_version = true
)]
struct Cli {
    /// JSON config file; command-line flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (default: $SPCAL_OUT_DIR, else current directory)
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a surface profile and export its JSON plus height samples
    Profile(ProfileArgs),
    /// Sample force-gradient coefficient curves k(d) to CSV
    Curve(CurveArgs),
    /// Generate a synthetic calibration sequence (voltage sweeps over distances)
    Simulate(SimulateArgs),
    /// Fit parabolas per distance and summarize the contact potential
    Calibrate(CalibrateArgs),
    /// Fit a power-law exponent to a k(d) curve over a distance window
    FitExponent(FitExponentArgs),
    /// Independent electrostatic oracles (image-charge series, FD Laplace)
    Oracle(OracleArgs),
    /// Scan imperfection geometry and tabulate effective exponents
    Scan(ScanArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Three-segment imperfect lens (bubble + flattened sector)
    Fig1,
    /// Perfect sphere (requires --radius)
    Perfect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormArg {
    /// SI units (m^-2-scaled coefficient)
    Si,
    /// Divide by N0 = eps0/(4 pi m_eff) x 10^13 (mass-independent)
    N0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    /// Three labeled series: perfect sphere, imperfect lens, d^-1.7 reference
    Fig2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Campaign {
    /// 500-distance campaign, perfect 151.3 um sphere, V_c = 15.29 mV,
    /// noise back-computed from a 0.13 mV target SEM
    Fig3,
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileArgs {
    /// Built-in profile preset
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Sphere radius in meters (with --preset perfect)
    #[arg(long)]
    pub radius: Option<f64>,
    /// Read the profile from an existing JSON file instead of a preset
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Number of (r, z) height samples to export
    #[arg(long)]
    pub samples: Option<usize>,
    /// Maximum radial coordinate for the height samples, meters
    #[arg(long)]
    pub r_max: Option<f64>,
}
merge_options!(ProfileArgs { preset, radius, input, samples, r_max });

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveArgs {
    /// Emit a multi-series figure dataset instead of a single curve
    #[arg(long, value_enum)]
    pub figure: Option<Figure>,
    /// Profile JSON file to sample
    #[arg(long, value_name = "PATH")]
    pub profile: Option<PathBuf>,
    /// Built-in profile preset (alternative to --profile)
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Sphere radius in meters (with --preset perfect)
    #[arg(long)]
    pub radius: Option<f64>,
    /// Smallest separation, meters
    #[arg(long)]
    pub dmin: Option<f64>,
    /// Largest separation, meters
    #[arg(long)]
    pub dmax: Option<f64>,
    /// Number of log-spaced grid points
    #[arg(long)]
    pub points: Option<usize>,
    /// Output normalization
    #[arg(long, value_enum)]
    pub normalization: Option<NormArg>,
    /// Pinning distance of the d^-1.7 reference series, meters
    #[arg(long)]
    pub d0: Option<f64>,
    /// Oscillator effective mass, kg
    #[arg(long)]
    pub meff: Option<f64>,
    /// Oscillator rest frequency, Hz
    #[arg(long)]
    pub nu0: Option<f64>,
}
merge_options!(CurveArgs {
    figure, profile, preset, radius, dmin, dmax, points, normalization, d0, meff, nu0
});

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    /// Preconfigured campaign shape
    #[arg(long, value_enum)]
    pub campaign: Option<Campaign>,
    /// Profile JSON file
    #[arg(long, value_name = "PATH")]
    pub profile: Option<PathBuf>,
    /// Built-in profile preset (alternative to --profile)
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Sphere radius in meters (with --preset perfect)
    #[arg(long)]
    pub radius: Option<f64>,
    /// True contact potential, volts
    #[arg(long)]
    pub vc: Option<f64>,
    /// Smallest separation, meters
    #[arg(long)]
    pub dmin: Option<f64>,
    /// Largest separation, meters
    #[arg(long)]
    pub dmax: Option<f64>,
    /// Number of log-spaced distances
    #[arg(long)]
    pub distances: Option<usize>,
    /// Center of the symmetric voltage sweep, volts
    #[arg(long)]
    pub v_center: Option<f64>,
    /// Half-width of the voltage sweep, volts
    #[arg(long)]
    pub v_span: Option<f64>,
    /// Number of voltage settings per distance (>= 5)
    #[arg(long)]
    pub voltages: Option<usize>,
    /// Widen the sweep proportionally to distance: at separation d the
    /// span is multiplied by d / V_REF (keeps per-distance fit SNR uniform)
    #[arg(long, value_name = "V_REF")]
    pub v_ref: Option<f64>,
    /// Gaussian frequency noise sigma, Hz
    #[arg(long)]
    pub noise: Option<f64>,
    /// Back-compute the noise sigma from this target SEM of the fitted
    /// contact potential, volts (overridden by an explicit --noise)
    #[arg(long)]
    pub target_sem: Option<f64>,
    /// Contact-potential drift, volts per decade of distance
    #[arg(long)]
    pub drift: Option<f64>,
    /// Reference distance of the drift model, meters
    #[arg(long)]
    pub drift_ref: Option<f64>,
    /// Piezo-creep amplitude, meters
    #[arg(long)]
    pub creep_amp: Option<f64>,
    /// Piezo-creep exponent (dimensionless)
    #[arg(long)]
    pub creep_exp: Option<f64>,
    /// Reference distance of the creep model, meters
    #[arg(long)]
    pub creep_ref: Option<f64>,
    /// RNG seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Omit ground truth (contact potential, noise spec) from the sidecar
    #[arg(long, action = clap::ArgAction::SetTrue)]
    pub blind: Option<bool>,
    /// Oscillator effective mass, kg
    #[arg(long)]
    pub meff: Option<f64>,
    /// Oscillator rest frequency, Hz
    #[arg(long)]
    pub nu0: Option<f64>,
    /// Sequence identifier written into the CSV
    #[arg(long)]
    pub seq_id: Option<String>,
}
merge_options!(SimulateArgs {
    campaign, profile, preset, radius, vc, dmin, dmax, distances, v_center, v_span,
    voltages, v_ref, noise, target_sem, drift, drift_ref, creep_amp, creep_exp,
    creep_ref, seed, blind, meff, nu0, seq_id
});

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateArgs {
    /// Sequence CSV to calibrate (columns seq_id, d_m, V_volt, nu_hz)
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
}
merge_options!(CalibrateArgs { input });

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitExponentArgs {
    /// Curve CSV to fit (columns d_m, k_value, normalization, provenance)
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Lower edge of the fit window, meters (required)
    #[arg(long)]
    pub dmin: Option<f64>,
    /// Upper edge of the fit window, meters (required)
    #[arg(long)]
    pub dmax: Option<f64>,
}
merge_options!(FitExponentArgs { input, dmin, dmax });

#[derive(Args)]
pub struct OracleArgs {
    #[command(subcommand)]
    pub kind: OracleKind,
}

#[derive(Subcommand)]
pub enum OracleKind {
    /// Exact image-charge capacitance series for a perfect sphere
    Series(SeriesArgs),
    /// Axisymmetric finite-difference Laplace solve
    Fd(FdArgs),
}

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesArgs {
    /// Sphere radius, meters
    #[arg(long)]
    pub radius: Option<f64>,
    /// Gap-to-radius ratios d/R to tabulate (repeatable)
    #[arg(long = "ratio", value_name = "D_OVER_R")]
    pub ratios: Option<Vec<f64>>,
    /// Potential difference V - V_c, volts
    #[arg(long)]
    pub voltage: Option<f64>,
    /// Relative term tolerance of the series
    #[arg(long)]
    pub tol: Option<f64>,
}
merge_options!(SeriesArgs { radius, ratios, voltage, tol });

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdArgs {
    /// Profile JSON file
    #[arg(long, value_name = "PATH")]
    pub profile: Option<PathBuf>,
    /// Built-in profile preset (alternative to --profile)
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Sphere radius in meters (with --preset perfect)
    #[arg(long)]
    pub radius: Option<f64>,
    /// Gap-to-radius ratio d/R (must be >= 0.01)
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Radial node count
    #[arg(long)]
    pub nr: Option<usize>,
    /// Axial node count
    #[arg(long)]
    pub nz: Option<usize>,
    /// Iteration convergence tolerance (relative max update)
    #[arg(long)]
    pub tol: Option<f64>,
}
merge_options!(FdArgs { profile, preset, radius, ratio, nr, nz, tol });

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanArgs {
    /// Global lens radius, meters
    #[arg(long)]
    pub global_radius: Option<f64>,
    /// Bubble curvature radius range, meters
    #[arg(long)]
    pub rcd_min: Option<f64>,
    #[arg(long)]
    pub rcd_max: Option<f64>,
    #[arg(long)]
    pub rcd_steps: Option<usize>,
    /// Bubble height range, meters
    #[arg(long)]
    pub h_min: Option<f64>,
    #[arg(long)]
    pub h_max: Option<f64>,
    #[arg(long)]
    pub h_steps: Option<usize>,
    /// Sector curvature multiplier range (R_sector = multiplier x R)
    #[arg(long)]
    pub mult_min: Option<f64>,
    #[arg(long)]
    pub mult_max: Option<f64>,
    #[arg(long)]
    pub mult_steps: Option<usize>,
    /// Sector height range, meters
    #[arg(long)]
    pub sector_min: Option<f64>,
    #[arg(long)]
    pub sector_max: Option<f64>,
    #[arg(long)]
    pub sector_steps: Option<usize>,
    /// Lower edge of the exponent fit window, meters
    #[arg(long)]
    pub dmin: Option<f64>,
    /// Upper edge of the exponent fit window, meters
    #[arg(long)]
    pub dmax: Option<f64>,
}
merge_options!(ScanArgs {
    global_radius, rcd_min, rcd_max, rcd_steps, h_min, h_max, h_steps,
    mult_min, mult_max, mult_steps, sector_min, sector_max, sector_steps, dmin, dmax
});

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                spcal::Error::Numeric(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> spcal::Result<()> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let out_dir = cli
        .out_dir
        .or(cfg.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    match cli.command {
        Command::Profile(a) => commands::cmd_profile(a.merged(cfg.profile), &out_dir),
        Command::Curve(a) => commands::cmd_curve(a.merged(cfg.curve), &out_dir),
        Command::Simulate(a) => commands::cmd_simulate(a.merged(cfg.simulate), &out_dir),
        Command::Calibrate(a) => commands::cmd_calibrate(a.merged(cfg.calibrate), &out_dir),
        Command::FitExponent(a) => {
            commands::cmd_fit_exponent(a.merged(cfg.fit_exponent), &out_dir)
        }
        Command::Oracle(a) => match a.kind {
            OracleKind::Series(s) => {
                commands::cmd_oracle_series(s.merged(cfg.oracle.series), &out_dir)
            }
            OracleKind::Fd(f) => commands::cmd_oracle_fd(f.merged(cfg.oracle.fd), &out_dir),
        },
        Command::Scan(a) => commands::cmd_scan(a.merged(cfg.scan), &out_dir),
    }
}

//! Command-line front end: moments across paths, field maps, the equatorial Airy
//! curve, SI estimates and a self-check.

pub mod commands;
pub mod config;
pub mod report;
pub mod selfcheck;

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use packet_moments::fields::Span;
use packet_moments::Error;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_DISAGREEMENT: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("paths disagree: {0}")]
    Disagreement(String),
    #[error("output error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Disagreement(_) => EXIT_DISAGREEMENT,
            CliError::Io(_) => EXIT_FAILURE,
            CliError::Core(e) => match e {
                Error::VortexDivergence { .. } | Error::SingularPhase => EXIT_DIVERGENCE,
                Error::InvalidParameter(_)
                | Error::NonFinite(_)
                | Error::NotTraceless(_)
                | Error::MissingScale
                | Error::UnitParse(_)
                | Error::Syntax { .. }
                | Error::UnboundParameter(_)
                | Error::DegenerateCat(_)
                | Error::SuperluminalBoost(_)
                | Error::BoxTooSmall(_)
                | Error::InvalidGrid(_) => EXIT_CONFIG,
                _ => EXIT_FAILURE,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Analytic,
    Quadrature,
    PhaseFormula,
    Grid,
}

impl PathKind {
    pub fn name(self) -> &'static str {
        match self {
            PathKind::Analytic => "analytic",
            PathKind::Quadrature => "quadrature",
            PathKind::PhaseFormula => "phase_formula",
            PathKind::Grid => "grid",
        }
    }
}

/// `value` or `min:max:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanArg(pub Span);

impl FromStr for SpanArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number"));
        match parts.as_slice() {
            [v] => Ok(SpanArg(Span::single(num(v)?))),
            [a, b, n] => Ok(SpanArg(Span {
                min: num(a)?,
                max: num(b)?,
                count: n.trim().parse().map_err(|_| format!("'{n}' is not a count"))?,
            })),
            _ => Err(format!("expected VALUE or MIN:MAX:COUNT, got '{s}'")),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "packet-moments", version, about = "Intrinsic multipole moments and far fields of charged wave packets")]
pub struct Cli {
    /// Report wall time on stderr.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct PacketArgs {
    /// Packet config file (TOML).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Override packet.sigma.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Override packet.mass.
    #[arg(long)]
    pub mass: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moments from the requested paths with a cross-path agreement report.
    Moments {
        #[command(flatten)]
        packet: PacketArgs,
        /// Paths to run; defaults to every path that applies to the family.
        #[arg(long, value_delimiter = ',')]
        paths: Vec<PathKind>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Add the quadrupole in e·cm² (needs a physical σ_⊥).
        #[arg(long)]
        si: bool,
        /// Physical σ_⊥ with unit (nm, um, m); overrides units.sigma_perp.
        #[arg(long)]
        sigma_perp: Option<String>,
    },
    /// E and H on a spherical grid, rows ordered by r, then θ, then φ.
    Fieldmap {
        #[command(flatten)]
        packet: PacketArgs,
        /// Path supplying the moments; analytic when available, quadrature otherwise.
        #[arg(long, value_enum)]
        source: Option<PathKind>,
        #[arg(long, default_value = "10")]
        r: SpanArg,
        #[arg(long, default_value = "1.5707963267948966")]
        theta: SpanArg,
        #[arg(long, default_value = "0:6.283185307179586:73")]
        phi: SpanArg,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Equatorial radial field of an Airy packet with ξ_y = 0.
    Fig1 {
        #[arg(long, default_value_t = 1.0)]
        xi3: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 10.0)]
        r: f64,
        #[arg(long, default_value_t = 360)]
        samples: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Order-of-magnitude |Q| in e·cm² and μ in Bohr magnetons.
    Estimate {
        /// Transverse width with unit, e.g. 0.1nm or 10um.
        #[arg(long)]
        sigma_perp: String,
        /// OAM quantum number.
        #[arg(long, allow_hyphen_values = true)]
        l: Option<i64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Runs the built-in invariant checks; exit 4 if any fails.
    Selfcheck,
}

/// Executes a parsed command line, writing results to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let start = std::time::Instant::now();
    let result = match &cli.command {
        Command::Moments {
            packet,
            paths,
            format,
            si,
            sigma_perp,
        } => commands::moments(packet, paths, *format, *si, sigma_perp.as_deref(), out),
        Command::Fieldmap {
            packet,
            source,
            r,
            theta,
            phi,
            format,
        } => commands::fieldmap(packet, *source, [r.0, theta.0, phi.0], *format, out),
        Command::Fig1 {
            xi3,
            sigma,
            r,
            samples,
            format,
        } => commands::fig1(*xi3, *sigma, *r, *samples, *format, out),
        Command::Estimate { sigma_perp, l, format } => commands::estimate(sigma_perp, *l, *format, out),
        Command::Selfcheck => selfcheck::run(out),
    };
    if cli.timing {
        eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    }
    result
}

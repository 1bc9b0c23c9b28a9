//! `idslab` command line. [`run`] parses arguments, runs one experiment and
//! returns the process exit code: 0 on success, 2 on configuration errors,
//! 1 on computation errors or failed self-checks.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod config;

#[derive(Debug, Parser)]
#[command(
    name = "idslab",
    version,
    about = "Integrated density of states experiments for random acoustic operators -div(rho grad)",
    after_help = "Output directory: --out, else $IDSLAB_OUT, else [run].out of the config, else ./out.\n\
                  Without --spec the free field rho = 1 (d = 1, mesh 16) is used."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every experiment. Values given here override the config file.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config: coefficient spec plus an optional [run] table
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,
    /// Dimension (1 or 2), overrides the config
    #[arg(long)]
    pub d: Option<usize>,
    /// Sample points per unit cell per axis, overrides the config
    #[arg(long)]
    pub m: Option<usize>,
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [default: available parallelism]
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Energy selection: an explicit list or a geometric grid.
#[derive(Debug, Clone, Args)]
pub struct Energies {
    /// Energies, comma separated
    #[arg(long = "E", value_delimiter = ',', allow_negative_numbers = true)]
    pub energies: Vec<f64>,
    /// Geometric grid lo:hi:per_decade
    #[arg(long, conflicts_with = "energies")]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Bc {
    Dirichlet,
    Neumann,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IdsMethod {
    /// Floquet IDS of periodized samples
    Periodized,
    /// Eigenvalue counts on the finite box
    Fv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mean {
    Arithmetic,
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldFormat {
    Csv,
    Binary,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample one coefficient field on the box of 2n+1 unit cells
    SampleField {
        #[command(flatten)]
        common: Common,
        /// Box radius [default: 2]
        #[arg(long)]
        n: Option<usize>,
        /// Sample index within the seed stream
        #[arg(long, default_value_t = 0)]
        index: u64,
        /// Write the periodized field instead of the realized one
        #[arg(long)]
        periodize: bool,
        #[arg(long, value_enum, default_value_t = FieldFormat::Csv)]
        format: FieldFormat,
    },
    /// Lowest Floquet band functions on a theta grid (endpoint rule, includes theta = 0)
    Bands {
        #[command(flatten)]
        common: Common,
        /// Tile the mean unit cell to 2n+1 cells [default: 0]
        #[arg(long)]
        n: Option<usize>,
        /// Use periodized sample 0 of the seed instead of the mean field
        #[arg(long)]
        sample: bool,
        /// Theta nodes per axis [default: 16]
        #[arg(long)]
        theta_nodes: Option<usize>,
        /// Number of bands
        #[arg(long, default_value_t = 4)]
        bands: usize,
    },
    /// IDS curve of the random operator
    Ids {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        energies: Energies,
        /// Estimator [default: periodized]
        #[arg(long, value_enum)]
        method: Option<IdsMethod>,
        /// Box radius [default: 20]
        #[arg(long)]
        n: Option<usize>,
        /// Monte Carlo samples [default: 20]
        #[arg(long)]
        samples: Option<usize>,
        /// Boundary condition for --method fv [default: dirichlet]
        #[arg(long, value_enum)]
        bc: Option<Bc>,
        /// Theta nodes per axis for --method periodized [default: 32]
        #[arg(long)]
        theta_nodes: Option<usize>,
    },
    /// IDS of the homogenized periodic operator -div(rho_bar grad)
    Homogenized {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        energies: Energies,
        #[arg(long, value_enum, default_value_t = Mean::Arithmetic)]
        mean: Mean,
        /// Theta nodes per axis [default: 64]
        #[arg(long)]
        theta_nodes: Option<usize>,
    },
    /// Sandwich N_bar(E - E^a) - C e^{-E^-tau} <= N(E) <= N_bar(E + E^a) + C e^{-E^-tau}
    Sandwich {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        energies: Energies,
        /// Window exponents, comma separated [default: 0.5,0.6,0.7,0.8]
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        /// Box radius [default: 200]
        #[arg(long)]
        n: Option<usize>,
        /// Monte Carlo samples [default: 200]
        #[arg(long)]
        samples: Option<usize>,
        /// [default: dirichlet]
        #[arg(long, value_enum)]
        bc: Option<Bc>,
        /// Theta nodes per axis for N_bar [default: 64]
        #[arg(long)]
        theta_nodes: Option<usize>,
        /// N_bar runs on 2 cells + 1 tiled unit cells
        #[arg(long, default_value_t = 8)]
        cells: usize,
        /// Fixed C (>= 1); fitted when omitted
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
    },
    /// Bracket of IDS increments by periodic approximants
    ApproxCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long = "E", default_value_t = 0.1)]
        energy: f64,
        #[arg(long, default_value_t = 0.02)]
        eps: f64,
        /// Box radius of the approximants [default: 16]
        #[arg(long)]
        n: Option<usize>,
        /// [default: 200]
        #[arg(long)]
        samples: Option<usize>,
        /// Exponent of the coupling n >= eps^-exponent
        #[arg(long, default_value_t = 1.0)]
        coupling_exponent: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        /// [default: 32]
        #[arg(long)]
        theta_nodes: Option<usize>,
        /// Box radius of the finite-volume reference
        #[arg(long, default_value_t = 200)]
        reference_n: usize,
    },
    /// Monte Carlo probability of the deviation event on the low-energy subspace
    Deviation {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        energies: Energies,
        /// Box radii, comma separated [default: 16]
        #[arg(long = "n", value_delimiter = ',')]
        radii: Vec<usize>,
        #[arg(long, default_value_t = 0.6)]
        alpha: f64,
        /// [default: 10000]
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        cutoff_mult: f64,
    },
    /// Large-deviation tail of the mean of m couplings
    LdRate {
        /// bernoulli:p[:v0:v1], uniform:a:b or constant:v
        #[arg(long)]
        law: String,
        /// Number of cells
        #[arg(long)]
        m: u64,
        #[arg(long)]
        t: f64,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Exactly solvable checks
    Selftest {
        #[arg(long)]
        workers: Option<usize>,
    },
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("idslab: {e}");
            if commands::is_config_error(&e) {
                2
            } else {
                1
            }
        }
    }
}

//! `riesz`: batch driver for finite-stage Riesz product analyses.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use output::Format;

#[derive(Parser, Debug, Serialize)]
#[command(name = "riesz", version, about = "Finite-stage generalized Riesz product analyses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StageRange {
    pub first: usize,
    pub last: usize,
}

fn parse_range(s: &str) -> Result<StageRange, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("invalid stage {t:?}"))
    };
    let (first, last) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b)?),
        None => {
            let n = num(s)?;
            (n, n)
        }
    };
    if first == 0 || first > last {
        return Err(format!("stage range {s:?} must satisfy 1 <= a <= b"));
    }
    Ok(StageRange { first, last })
}

/// Flags shared by every command.
#[derive(Args, Debug, Serialize)]
pub struct Io {
    /// Output path; stdout when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Output format; defaults from the `--out` extension, else json.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Grid size override.
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct SpecArg {
    /// JSON spec file.
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct StageArg {
    /// Stage `n` (default: the last stage).
    #[arg(long)]
    pub stage: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct StagesArg {
    /// Stage range `a..b` or a single stage (default: all).
    #[arg(long, value_parser = parse_range)]
    pub stages: Option<StageRange>,
}

#[derive(Args, Debug, Serialize)]
pub struct PolyArg {
    /// Polynomial as `{"terms": [[e, re, im], ...]}`, inline or a file path.
    #[arg(long, conflicts_with = "coeffs")]
    pub poly: Option<String>,
    /// Dense real coefficients, comma separated, constant term first.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Command {
    /// Density |S_n|^2 on the grid.
    Density {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        stage: StageArg,
        #[command(flatten)]
        io: Io,
    },
    /// Fourier coefficients of |S_n|^2 for 0..=kmax.
    Fourier {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        stage: StageArg,
        #[arg(long, default_value_t = 16)]
        kmax: u64,
        #[command(flatten)]
        io: Io,
    },
    /// Per-stage b_0, beta, tail constant, degree margin and Mahler product.
    Diagnostics {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        stages: StagesArg,
        #[command(flatten)]
        io: Io,
    },
    /// Mahler measure of S_n per stage.
    Mahler {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        stages: StagesArg,
        #[command(flatten)]
        io: Io,
    },
    /// Affinity int |S_n| |T_n| against a second spec.
    Affinity {
        #[command(flatten)]
        spec: SpecArg,
        /// Second spec file.
        #[arg(long)]
        against: PathBuf,
        #[command(flatten)]
        stages: StagesArg,
        #[command(flatten)]
        io: Io,
    },
    /// ||S_n||_1 per stage.
    Bourgain {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        stages: StagesArg,
        #[arg(long, default_value_t = 0.1)]
        hint_threshold: f64,
        #[arg(long, default_value_t = 3)]
        hint_window: usize,
        #[command(flatten)]
        io: Io,
    },
    /// Telescoping L1 inequality per stage.
    Guenais {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        stages: StagesArg,
        #[command(flatten)]
        io: Io,
    },
    /// |S_n| on the grid, or successive L1 increments.
    RnSqrt {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        stage: StageArg,
        /// Assert class (L) for the record; not checked.
        #[arg(long)]
        class_l: bool,
        /// Report || |S_{n+1}| - |S_n| ||_1 for n < stage instead.
        #[arg(long)]
        increments: bool,
        #[command(flatten)]
        io: Io,
    },
    /// Phase S_n / |S_n| on the grid.
    Phase {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        stage: StageArg,
        #[arg(long, default_value_t = riesz_core::dichotomy::PHASE_FLOOR)]
        floor: f64,
        #[command(flatten)]
        io: Io,
    },
    /// Upper bound on the smallest subproduct L1 norm.
    SupportBound {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = 50)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        io: Io,
    },
    /// Rank-one spectral polynomials.
    Rankone {
        #[command(subcommand)]
        action: RankoneAction,
    },
    /// Flatness metrics, Barker sequences, Gaussian experiment, zero checks.
    Flatness {
        #[command(subcommand)]
        action: FlatnessAction,
    },
    /// Replace every factor P(z) by P(z^q).
    Contract {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        q: u64,
        #[command(flatten)]
        io: Io,
    },
    /// Check a spec without running anything.
    Validate {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        stages: StagesArg,
        #[command(flatten)]
        io: Io,
    },
}

#[derive(Subcommand, Debug, Serialize)]
pub enum RankoneAction {
    /// Stage polynomials from a spec with a `rankone` stanza.
    Build {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        io: Io,
    },
    /// Dynamical-origin conditions and parameter reconstruction.
    Check {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        io: Io,
    },
    /// Dissociating lift of the factors, optionally after a flatness selection.
    Lift {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = 2)]
        multiplier: u64,
        /// Select this many factors with the 2^-k flatness schedule first.
        #[arg(long)]
        flat: Option<usize>,
        #[command(flatten)]
        io: Io,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpacerLawArg {
    Uniform,
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroKind {
    RForm,
    ZeroOne,
    Cluster,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum FlatnessAction {
    /// L1/L2, Mahler/L2, sup deviation and coefficient classes.
    Metrics {
        #[command(flatten)]
        poly: PolyArg,
        #[command(flatten)]
        io: Io,
    },
    /// Verify a sign sequence, or the whole catalog.
    Barker {
        /// Signs such as `+,+,-` or `1,1,-1`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        seq: Option<Vec<String>>,
        #[command(flatten)]
        io: Io,
    },
    /// L1 norms of random rank-one stage polynomials against sqrt(pi)/2.
    Gaussian {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tower height (default m).
        #[arg(long)]
        height: Option<u64>,
        #[arg(long, value_enum, default_value_t = SpacerLawArg::Uniform)]
        spacer_law: SpacerLawArg,
        /// Exclusive upper bound for uniform spacers (default: height).
        #[arg(long)]
        spacer_upper: Option<u64>,
        /// Spacer for the constant law.
        #[arg(long, default_value_t = 0)]
        spacer_value: u64,
        #[command(flatten)]
        io: Io,
    },
    /// Zero-location checks.
    Zeros {
        #[arg(long, value_enum)]
        kind: ZeroKind,
        #[command(flatten)]
        poly: PolyArg,
        /// Base height for the (R) form.
        #[arg(long)]
        h: Option<u64>,
        /// Build the (R) form from these spacers instead of a polynomial.
        #[arg(long, value_delimiter = ',')]
        spacers: Option<Vec<u64>>,
        /// Circle point angle for the cluster count.
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
        #[command(flatten)]
        io: Io,
    },
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("RIESZ_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("RIESZ_THREADS={v:?} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

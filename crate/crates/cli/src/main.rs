use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

/// Spectra, Heun polynomials, verification reports and simulations for the
/// overdamped RSJ junction under harmonic bias.
#[derive(Parser)]
#[command(name = "heun-rsj", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum System {
    /// `phi' + sin(phi) = q(t)`
    Phase,
    /// The linear `(x, y)` system.
    Xy,
}

#[derive(Subcommand)]
pub enum Command {
    /// Roots of Delta_n(lambda, mu) and the drive for each root.
    Spectrum {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Coefficients of the Heun polynomial at a spectral root.
    Poly {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long, default_value_t = 0)]
        root: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol_spec: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Residual dashboard for a spectral polynomial.
    Verify {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long, default_value_t = 0)]
        root: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol_spec: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol_heun: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol_linear: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol_symmetry: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol_relations: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol_factorization: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol_split: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// RK4 trajectory of the phase equation or the linear system.
    Simulate {
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, allow_negative_numbers = true)]
        omega: f64,
        #[arg(long)]
        t_end: f64,
        /// Step size; defaults to one 2000th of the drive period.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, value_enum, default_value = "phase")]
        system: System,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phi0: f64,
        /// Keep every k-th sample.
        #[arg(long, default_value_t = 1)]
        every: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Closed-form phase against RK4 from the same initial value.
    PhaseCompare {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long, default_value_t = 0)]
        root: usize,
        #[arg(long, default_value_t = 10.0)]
        periods: f64,
        #[arg(long, default_value_t = 2000)]
        steps_per_period: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Weighted integral of two spectral polynomials over the positive axis.
    Ortho {
        #[arg(long)]
        n1: usize,
        #[arg(long, default_value_t = 0)]
        root1: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long, default_value_t = 0)]
        root2: usize,
        #[arg(long, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Spectral surface over a grid of degrees and mu, as CSV.
    Sweep {
        #[arg(long, default_value_t = 0)]
        n_min: usize,
        #[arg(long)]
        n_max: usize,
        #[arg(long, allow_negative_numbers = true)]
        mu_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        mu_max: f64,
        #[arg(long, default_value_t = 11)]
        mu_count: usize,
    },
}

/// Failure of a subcommand, mapped onto the exit-code contract.
pub enum Failure {
    /// Exit 2.
    Usage(String),
    /// Exit 1; the name goes to stderr.
    Compute { name: String, message: String },
}

impl From<heun_rsj::Error> for Failure {
    fn from(e: heun_rsj::Error) -> Self {
        Failure::Compute { name: e.name().to_string(), message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let format = cli.command.format();
    match commands::run(&cli.command) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(1);
            }
            if out.ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("ToleranceExceeded: a reported residual is above its tolerance");
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute { name, message }) => {
            eprintln!("{name}: {message}");
            if format == Some(Format::Json) {
                print!("{}", commands::error_json(&name, &message));
            }
            ExitCode::from(1)
        }
    }
}

impl Command {
    fn format(&self) -> Option<Format> {
        match self {
            Command::Spectrum { format, .. }
            | Command::Poly { format, .. }
            | Command::Verify { format, .. }
            | Command::Simulate { format, .. }
            | Command::PhaseCompare { format, .. }
            | Command::Ortho { format, .. } => Some(*format),
            Command::Sweep { .. } => Some(Format::Csv),
        }
    }
}

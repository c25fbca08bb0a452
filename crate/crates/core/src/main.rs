use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qgraph::cli::{self, Options, EXIT_INVALID};
use qgraph::connectivity::Method;

#[derive(Parser)]
#[command(name = "qgraph", version, about = "Connectivity and spectral checks for quantum graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Graph file (JSON).
    file: PathBuf,
    /// Tolerance, overriding the one stored in the file.
    #[arg(long)]
    tol: Option<f64>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the Schur idempotent condition and report flags.
    Validate(Common),
    /// Decide connectivity.
    Connectivity {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        /// Run every applicable method and fail on disagreement.
        #[arg(long)]
        cross_check: bool,
    },
    /// Decide bipartiteness of a connected undirected graph.
    Bipartite(Common),
    /// Spectrum of the KMS implementation and Perron-Frobenius data.
    Spectrum(Common),
    /// Connected components.
    Components(Common),
    /// Sample QG(n, d) and write it as a graph file.
    Random {
        n: usize,
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn opts(common: &Common) -> Options {
    Options {
        tol: common.tol,
        ..Options::default()
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let outcome = match &args.command {
        Command::Validate(c) => cli::cmd_validate(&c.file, &opts(c), c.out.as_deref()),
        Command::Connectivity {
            common,
            method,
            cross_check,
        } => {
            let o = Options {
                method: *method,
                cross_check: *cross_check,
                ..opts(common)
            };
            cli::cmd_connectivity(&common.file, &o, common.out.as_deref())
        }
        Command::Bipartite(c) => cli::cmd_bipartite(&c.file, &opts(c), c.out.as_deref()),
        Command::Spectrum(c) => cli::cmd_spectrum(&c.file, &opts(c), c.out.as_deref()),
        Command::Components(c) => cli::cmd_components(&c.file, &opts(c), c.out.as_deref()),
        Command::Random { n, d, seed, out } => {
            return match cli::cmd_random(*n, *d, *seed, out.as_deref()) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_INVALID as u8)
                }
            };
        }
    };
    if let Some(err) = &outcome.report.error {
        eprintln!("error: {}", err.message);
    }
    ExitCode::from(outcome.exit_code as u8)
}

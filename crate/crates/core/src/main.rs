use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use korteweg_core::cli::{self, Outcome};
use korteweg_core::io::output_root;

/// Low Mach number Navier-Stokes-Korteweg simulations and norm diagnostics.
///
/// Outputs go to `$KORTEWEG_OUT` (default `./korteweg_out`). Exit status is 0
/// when every verdict passes, 1 when one fails, 2 on error.
#[derive(Parser)]
#[command(name = "korteweg", version)]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the compressible system from synthesized data.
    Simulate { config: PathBuf },
    /// Run an experiment plan.
    Sweep { plan: PathBuf },
    /// Check decay, equivalence and semigroup properties of the linear propagator.
    VerifyLinear { config: PathBuf },
    /// Check the dyadic filter bank on the configured grid.
    VerifyLp { config: PathBuf },
    /// Evaluate norms of snapshot files.
    Norms {
        #[arg(required = true)]
        snapshots: Vec<PathBuf>,
        /// e.g. "fourier_besov s=0 p=2 sigma=1 trunc=low:0.5 r=inf"; repeatable.
        #[arg(long = "spec", required = true)]
        specs: Vec<String>,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let root = output_root();
    let res: korteweg_core::Result<Outcome> = match &args.cmd {
        Cmd::Simulate { config } => cli::simulate(config, &root),
        Cmd::Sweep { plan } => cli::sweep(plan, &root),
        Cmd::VerifyLinear { config } => cli::verify_linear(config, &root),
        Cmd::VerifyLp { config } => cli::verify_lp(config, &root),
        Cmd::Norms { snapshots, specs } => cli::norms(snapshots, specs, &root),
    };
    match res {
        Ok(out) => {
            for line in &out.summary {
                println!("{line}");
            }
            println!("run {} -> {}", &out.run_id, out.dir.display());
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

//! `alp` — command-line front end of the adaptive lattice planner.

use alp_core::error::Error;
use alp_core::harness::{full_library, prepare, run_campaign, CampaignOptions, Scenario};
use alp_core::primitives::library::{PrimitiveLibrary, ENDPOINT_TOL_GRID};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_FAILURE: u8 = 1;
const EXIT_NO_PATH: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

#[derive(Parser)]
#[command(name = "alp", version, about = "State-lattice planning with online parameter identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-execution planning campaign and write its artifacts.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's execution count.
        #[arg(long)]
        executions: Option<usize>,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write an SVG overlay of paths, tubes and obstacles.
        #[arg(long)]
        emit_plots: bool,
    },
    /// Generate the primitive library for every nominal parameter sample.
    GenPrimitives {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-integrate every entry of a library and check its endpoint.
    Verify {
        #[arg(long)]
        library: PathBuf,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NoPath => EXIT_NO_PATH,
        Error::InvariantViolation(_) => EXIT_INVARIANT,
        _ => EXIT_FAILURE,
    }
}

fn run(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Plan { scenario, out, executions, seed, emit_plots } => {
            let sc = Scenario::load(&scenario)?;
            let opts = CampaignOptions { executions, seed, out_dir: Some(&out), emit_plots };
            let report = run_campaign(&sc, &opts)?;
            for r in &report.records {
                println!(
                    "execution {:>2}: cost {:.6} diam {:.4e} -> {:.4e} delta {:.4e} tube {:.3e} {}",
                    r.execution,
                    r.plan_cost,
                    r.diam_start,
                    r.diam_end,
                    r.delta,
                    r.max_tube_dev,
                    if r.tube_ok { "ok" } else { "VIOLATED" }
                );
            }
            println!("artifacts written to {}", out.display());
            if !report.all_tubes_ok {
                eprintln!("error: tube containment violated");
                return Ok(EXIT_INVARIANT);
            }
            Ok(0)
        }
        Command::GenPrimitives { scenario, out } => {
            let sc = Scenario::load(&scenario)?;
            let prep = prepare(&sc)?;
            let lib = full_library(&prep)?;
            lib.save(&out)?;
            let failed = lib.report.iter().filter(|r| !r.ok).count();
            println!(
                "{} primitives over {} nominals written to {} ({} failed)",
                lib.entries.len(),
                lib.nominal_params().len(),
                out.display(),
                failed
            );
            for r in lib.report.iter().filter(|r| !r.ok) {
                eprintln!("nominal {} offset {:?}: {}", r.nominal_id, r.offset, r.message);
            }
            Ok(if failed == 0 { 0 } else { EXIT_FAILURE })
        }
        Command::Verify { library } => {
            let lib = PrimitiveLibrary::load(&library)?;
            let gaps = lib.verify_all()?;
            let worst = gaps.iter().cloned().fold(0.0, f64::max);
            let bad = gaps.iter().filter(|g| g.is_nan() || **g > ENDPOINT_TOL_GRID).count();
            println!("{} entries, worst endpoint gap {:.3e} grid units, {} above {:.0e}", gaps.len(), worst, bad, ENDPOINT_TOL_GRID);
            Ok(if bad == 0 { 0 } else { EXIT_INVARIANT })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

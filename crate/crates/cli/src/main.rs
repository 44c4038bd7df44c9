use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dkp_cli::{run, Subcommand};

#[derive(Parser)]
#[command(name = "dkp", version, about = "Kinetic dKP hierarchy: simulation and structure checks")]
struct Args {
    /// simulate | invariants | frobenius-check | hodograph | coords
    subcommand: Subcommand,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.directory` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

fn threads() -> Result<usize, String> {
    match std::env::var("DKP_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("DKP_THREADS: '{v}' is not a non-negative integer")),
        Err(_) => Ok(0),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match threads() {
        Ok(n) => {
            // 0 leaves rayon's default (one worker per core)
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("dkp: {e}");
                return ExitCode::from(2);
            }
        }
        Err(e) => {
            eprintln!("dkp: {e}");
            return ExitCode::from(2);
        }
    }
    let report = run(args.subcommand, &args.config, args.out.as_deref());
    let code = report.exit_code();
    if code != 0 || !args.quiet {
        print!("{}", report.to_json());
    }
    ExitCode::from(code as u8)
}

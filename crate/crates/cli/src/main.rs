use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use jetlag_cli::commands::{self, Rendered};
use jetlag_cli::{CliError, Problem};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Analyze,
    Connection,
    Torsion,
    Curvature,
    Extremal,
    Residual,
    Verify,
}

/// Geometry of metrical multi-time Lagrange spaces.
#[derive(Debug, Parser)]
#[command(name = "jetlag", version)]
struct Args {
    command: Command,
    /// Problem configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Evaluation point, e.g. "t=0;x=1,0.5;v=0.1,0.2". Omitted groups use the
    /// centre of the sampling box.
    #[arg(long)]
    point: Option<String>,
    /// Write the main output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides sampling.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON report instead of CSV (extremal, residual) or text (verify).
    #[arg(long)]
    json: bool,
}

fn threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("JETLAG_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("JETLAG_THREADS must be a positive integer, got `{raw}`")))?;
    // fails only if a pool already exists, which cannot happen this early
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(args: &Args) -> Result<Rendered, CliError> {
    threads()?;
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Read {
        path: args.config.display().to_string(),
        source,
    })?;
    let mut problem = Problem::from_json(&text)?;
    if let Some(seed) = args.seed {
        problem.config.sampling.seed = seed;
    }
    let point = args.point.as_deref();
    match args.command {
        Command::Analyze => commands::analyze(&problem),
        Command::Connection => commands::connection(&problem, point),
        Command::Torsion => commands::tables(&problem, point, false),
        Command::Curvature => commands::tables(&problem, point, true),
        Command::Extremal => commands::extremal(&problem, args.json),
        Command::Residual => commands::residual(&problem, args.json),
        Command::Verify => commands::verify(&problem, args.json),
    }
}

fn emit(args: &Args, out: &Rendered) -> Result<(), CliError> {
    match &args.out {
        Some(path) => std::fs::write(path, &out.body).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        }),
        None => std::io::stdout().write_all(out.body.as_bytes()).map_err(|source| CliError::Write {
            path: "stdout".into(),
            source,
        }),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    let code = match run(&args) {
        Ok(out) => {
            for note in &out.notes {
                eprintln!("{note}");
            }
            match emit(&args, &out) {
                Ok(()) => out.code,
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

//! `riccati-nonosc`: run verification scenarios, validate scenario files,
//! and print the coefficient-family catalog.
//!
//! Exit codes: 0 = analysis completed (the scientific verdict lives in the
//! report, not the exit code); 1 = internal error; 2 = malformed scenario;
//! 3 = numerical failure that prevented completing the pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use riccati_nonosc_core::scenario::{
    catalog_text, load_scenario, run_scenario_to_dir, RunError, ScenarioError,
};

mod log;

#[derive(Parser)]
#[command(
    name = "riccati-nonosc",
    version,
    about = "Numerical non-oscillation verification for quasi-linear Hamiltonian systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files and write reports + CSV artifacts.
    Run {
        /// Scenario JSON files.
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Output directory; each scenario writes to `<out>/<file-stem>/`.
        #[arg(long, short)]
        out: PathBuf,
        /// Run up to N scenarios concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Validate a scenario file (schema check only, no numerics).
    Validate {
        /// Scenario JSON file.
        file: PathBuf,
    },
    /// List the coefficient-family catalog and auto-envelope rule.
    Catalog,
}

const EXIT_OK: u8 = 0;
const EXIT_INTERNAL: u8 = 1;
const EXIT_MALFORMED: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn run_one(path: &PathBuf, out_root: &PathBuf) -> u8 {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    let out_dir = out_root.join(&stem);

    let file = match load_scenario(path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return EXIT_MALFORMED;
        }
    };
    log::info(&format!("running scenario '{}' -> {}", file.name, out_dir.display()));
    match run_scenario_to_dir(&file, &out_dir) {
        Ok(report) => {
            let verdict = if report.verification.overall.pass {
                "pass".to_string()
            } else {
                format!("fail ({})", report.verification.overall.reasons.join(", "))
            };
            println!("{}: overall = {verdict}", report.scenario);
            EXIT_OK
        }
        Err(RunError::Scenario(e)) => {
            eprintln!("{}: {e}", path.display());
            EXIT_MALFORMED
        }
        Err(RunError::Pipeline(e)) => {
            eprintln!("{}: numerical failure: {e}", path.display());
            EXIT_NUMERICAL
        }
        Err(RunError::Output { path, message }) => {
            eprintln!("cannot write {path}: {message}");
            EXIT_INTERNAL
        }
    }
}

fn cmd_run(scenarios: Vec<PathBuf>, out: PathBuf, jobs: usize) -> u8 {
    let jobs = jobs.max(1);
    if jobs == 1 || scenarios.len() == 1 {
        return scenarios
            .iter()
            .map(|p| run_one(p, &out))
            .max()
            .unwrap_or(EXIT_OK);
    }
    // Fixed-size worker pool over the scenario list.
    let queue = std::sync::Mutex::new(scenarios.into_iter());
    let worst = std::sync::atomic::AtomicU8::new(EXIT_OK);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let next = queue.lock().unwrap().next();
                match next {
                    Some(path) => {
                        let code = run_one(&path, &out);
                        worst.fetch_max(code, std::sync::atomic::Ordering::SeqCst);
                    }
                    None => break,
                }
            });
        }
    });
    worst.into_inner()
}

fn cmd_validate(file: PathBuf) -> u8 {
    match load_scenario(&file) {
        Ok(s) => {
            println!("{}: valid (scenario '{}', n = {})", file.display(), s.name, s.n);
            EXIT_OK
        }
        Err(e @ ScenarioError::Io { .. }) => {
            eprintln!("{e}");
            EXIT_INTERNAL
        }
        Err(e) => {
            eprintln!("{}: {e}", file.display());
            EXIT_MALFORMED
        }
    }
}

fn main() -> ExitCode {
    log::init_from_env();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { scenarios, out, jobs } => cmd_run(scenarios, out, jobs),
        Command::Validate { file } => cmd_validate(file),
        Command::Catalog => {
            print!("{}", catalog_text());
            EXIT_OK
        }
    };
    ExitCode::from(code)
}

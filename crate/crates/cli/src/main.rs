use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use l0lms_cli::compare::compare_files;
use l0lms_cli::run::run;
use l0lms_cli::{CliError, Mode, RunOptions};
use sparse_lms::theory::SnrConvention;

/// l0-LMS sparse adaptive filtering: closed-form theory, Monte Carlo
/// simulation and reference experiments.
#[derive(Parser)]
#[command(name = "l0lms", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form theory over a preset or config grid
    Theory(RunArgs),
    /// Run the Monte Carlo simulation only
    Simulate(RunArgs),
    /// Run theory and simulation side by side
    Experiment(RunArgs),
    /// Compare a theory CSV with a simulation CSV on the same grid
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Reference experiment: exp1..exp5
    #[arg(long)]
    preset: Option<String>,
    /// JSON experiment spec, or a manifest from an earlier run
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, env = "L0LMS_OUT", default_value = "l0lms-out")]
    out: PathBuf,
    /// Base seed for every random stream, overriding the spec or preset
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per grid point, overriding the scaled default
    #[arg(long)]
    trials: Option<usize>,
    /// Multiplies L, Q and the trial count
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// How the SNR sets the noise power
    #[arg(long, value_enum)]
    snr_convention: Option<Convention>,
}

#[derive(Args)]
struct CompareArgs {
    /// CSV holding the theory values
    theory: PathBuf,
    /// CSV holding the simulated values
    sim: PathBuf,
    /// Largest acceptable |gap| in dB
    #[arg(long, default_value_t = 1.0)]
    tolerance_db: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    OutputReferred,
    InputReferred,
}

impl From<Convention> for SnrConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::OutputReferred => SnrConvention::OutputReferred,
            Convention::InputReferred => SnrConvention::InputReferred,
        }
    }
}

fn execute(mode: Mode, args: RunArgs) -> Result<(), CliError> {
    let opts = RunOptions {
        preset: args.preset,
        config: args.config,
        seed: args.seed,
        trials: args.trials,
        scale: args.scale,
        snr_convention: args.snr_convention.map(Into::into),
    };
    let outcome = run(mode, &opts, &args.out)?;
    for name in &outcome.manifest.outputs {
        println!("{}", args.out.join(name).display());
    }
    println!("{}", outcome.manifest_path.display());
    if !outcome.diverged.is_empty() {
        for d in &outcome.diverged {
            eprintln!("diverged: {d}");
        }
        return Err(CliError::Divergence(format!(
            "divergence detected at {} grid point(s)",
            outcome.diverged.len()
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Theory(a) => execute(Mode::Theory, a),
        Command::Simulate(a) => execute(Mode::Simulate, a),
        Command::Experiment(a) => execute(Mode::Experiment, a),
        Command::Compare(a) => compare_files(&a.theory, &a.sim, a.tolerance_db).and_then(|r| {
            print!("{}", r.render());
            if r.pass {
                Ok(())
            } else {
                Err(CliError::Tolerance(format!(
                    "max |gap| {:.4} dB exceeds tolerance {} dB",
                    r.max_abs_db, r.tolerance_db
                )))
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

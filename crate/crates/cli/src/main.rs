use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use multiconc::experiments::{
    bound_report, run_scatter, run_shots, write_scatter, write_shots, ExperimentConfig, DEFAULT_MIXING_LEVELS,
    DEFAULT_SAMPLE_COUNT,
};
use multiconc::statefile::StateFile;
use multiconc::states::{haar_random_pure, named_state, NamedState};
use multiconc::{Error, HilbertStructure};

/// Observable lower bounds on multipartite concurrence.
#[derive(Parser)]
#[command(name = "multiconc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the two-copy bound of a state file.
    Bound {
        state: PathBuf,
        /// Report the bound clamped at zero in the `bound` field.
        #[arg(long)]
        clamp: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep Haar-random states through the depolarizing channel.
    Scatter {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_SAMPLE_COUNT)]
        samples: usize,
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        /// Shots per (state, lambda); 0 evaluates exactly.
        #[arg(long, default_value_t = 0)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate finite-shot parity measurements on a state file.
    Shots {
        state: PathBuf,
        /// Shots per repetition; 0 evaluates exactly.
        #[arg(long)]
        shots: u64,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a reference or random state file.
    MakeState {
        kind: Kind,
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Depolarize with this mixing parameter and write a density matrix.
        #[arg(long, visible_alias = "lambdas")]
        lambda: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Ghz,
    W,
    Bell,
    Product,
    Haar,
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Bound { state, clamp, out } => {
            let state = StateFile::read(&state)?;
            let report = bound_report(&state, clamp)?;
            let mut w = output(out.as_deref())?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(w, "{text}")?;
            w.flush()?;
        }
        Command::Scatter {
            dims,
            samples,
            lambdas,
            shots,
            seed,
            out,
        } => {
            let config = ExperimentConfig {
                dims,
                sample_count: samples,
                mixing_levels: lambdas.unwrap_or_else(|| DEFAULT_MIXING_LEVELS.to_vec()),
                shots,
                master_seed: seed,
            };
            let rows = run_scatter(&config)?;
            let mut w = output(out.as_deref())?;
            write_scatter(&config, &rows, &mut w)?;
            w.flush()?;
        }
        Command::Shots {
            state,
            shots,
            reps,
            seed,
            out,
        } => {
            let state = StateFile::read(&state)?;
            let report = run_shots(&state.purity_table()?, shots, reps, seed)?;
            let mut w = output(out.as_deref())?;
            write_shots(&report, state.structure().dims(), shots, seed, &mut w)?;
            w.flush()?;
        }
        Command::MakeState {
            kind,
            dims,
            seed,
            lambda,
            out,
        } => {
            let structure = HilbertStructure::new(dims)?;
            let psi = match kind {
                Kind::Ghz => named_state(NamedState::Ghz, &structure)?,
                Kind::W => named_state(NamedState::W, &structure)?,
                Kind::Bell => named_state(NamedState::Bell, &structure)?,
                Kind::Product => named_state(NamedState::ProductBasis, &structure)?,
                Kind::Haar => haar_random_pure(&structure, seed),
            };
            let state = match lambda {
                Some(l) => StateFile::Density(psi.to_density().depolarize(l)?),
                None => StateFile::Pure(psi),
            };
            let mut w = output(out.as_deref())?;
            w.write_all(state.to_text().as_bytes())?;
            w.flush()?;
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidState(_) => 2,
        Error::Parse(_) => 3,
        Error::Capacity(_) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("multiconc: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

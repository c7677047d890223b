//! `phonoscope`: command-line front end.
//!
//! Exit status is 0 on success, 2 for bad input (arguments, corpus files,
//! tables) and 1 for internal failures.

mod args;
mod commands;
mod error;
mod report;

use std::panic;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{analogy, boundary, maskfill, synth, validate, vectors};
use error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "phonoscope", version, about = "Phonological structure analyses over frame-level speech representations")]
struct Cli {
    /// Worker threads; defaults to the available parallelism. Results do not
    /// depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic oracle corpus.
    Synth(synth::SynthArgs),
    /// Analogy success rates per layer.
    Analogy(analogy::AnalogyArgs),
    /// Analogies keyed by a neighbouring phone, pooled on the center phone.
    ContextAnalogy(analogy::ContextArgs),
    /// Success rate by neighbour offset and frame position bin.
    WindowSweep(analogy::SweepArgs),
    /// Extract phonological vectors and their similarity matrices.
    Phonovec(vectors::PhonovecArgs),
    /// Within- versus across-position vector similarity per layer.
    Orthogonality(vectors::PhonovecArgs),
    /// Mean vector norm per position and layer.
    Norms(vectors::PhonovecArgs),
    /// Similarity curves and crossings around feature boundaries.
    Boundary(boundary::BoundaryArgs),
    /// Frame-by-frame similarity to phonological vectors for one utterance.
    Trace(boundary::TraceArgs),
    /// Whitened similarity between original and masked-input frames.
    Maskfill(maskfill::MaskfillArgs),
    /// Check every file of a corpus.
    Validate(validate::ValidateArgs),
}

fn dispatch(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Synth(a) => synth::run(a),
        Command::Analogy(a) => analogy::run_analogy(a),
        Command::ContextAnalogy(a) => analogy::run_context(a),
        Command::WindowSweep(a) => analogy::run_sweep(a),
        Command::Phonovec(a) => vectors::run_phonovec(a),
        Command::Orthogonality(a) => vectors::run_orthogonality(a),
        Command::Norms(a) => vectors::run_norms(a),
        Command::Boundary(a) => boundary::run_boundary(a),
        Command::Trace(a) => boundary::run_trace(a),
        Command::Maskfill(a) => maskfill::run(a),
        Command::Validate(a) => validate::run(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("internal error: cannot start {n} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    match panic::catch_unwind(|| dispatch(&cli.command)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(1),
    }
}

//! `burstforge`: synthesize blurred bursts, rank frames, deblur and evaluate.

mod comparators;
mod deblur;
mod eval;
mod rank;
mod report;
mod synth;
mod train;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use report::UsageError;

pub const THREADS_ENV: &str = "BURSTFORGE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "burstforge", version, about = "Blurred-burst synthesis, frame ranking and incremental Fourier burst accumulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Blur a sharp image (or every image in a directory) into a burst.
    Synth(synth::SynthArgs),
    /// Order the frames of a burst from sharpest to blurriest.
    Rank(rank::RankArgs),
    /// Fuse a burst into one image.
    Deblur(deblur::DeblurArgs),
    /// Fit the feature comparator on labelled pairs.
    Train(train::TrainArgs),
    /// Scores and metrics.
    #[command(subcommand)]
    Eval(eval::EvalCommand),
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| UsageError(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads()?;
    match cli.command {
        Command::Synth(args) => synth::run(args),
        Command::Rank(args) => rank::run(args),
        Command::Deblur(args) => deblur::run(args),
        Command::Train(args) => train::run(args),
        Command::Eval(cmd) => eval::run(cmd),
    }
}

/// The error chain joined by `: `, skipping causes already quoted by the
/// message above them.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            eprintln!("\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}

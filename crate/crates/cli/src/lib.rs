//! Command-line front end for the corpus toolkit.

mod args;
mod commands;
pub mod config;
pub mod error;
pub mod fsio;
pub mod pipeline;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::Cli;
use args::Command;
pub use error::{CliError, CliResult};

/// Parses `argv` and runs the subcommand, writing results to `out`.
/// Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Log level for a `-v` count, unless `RUST_LOG` says otherwise.
pub fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
}

fn dispatch(command: Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Parse(a) => commands::parse(a),
        Command::BatchBuild(a) => commands::batch_build(a),
        Command::BatchIngest(a) => commands::batch_ingest(a),
        Command::Segment(a) => commands::segment(a),
        Command::LangidTrain(a) => commands::langid_train(a),
        Command::LangidFilter(a) => commands::langid_filter(a),
        Command::Align(a) => commands::align(a),
        Command::Pivot(c) => commands::pivot(c, out),
        Command::Chrf(a) => commands::chrf_cmd(a, out),
        Command::QualityReport(a) => commands::quality_report(a, out),
        Command::Subset(a) => commands::subset(a),
        Command::Iaa(a) => commands::iaa(a, out),
        Command::Spearman(a) => commands::spearman_cmd(a, out),
        Command::AnnotateServe(a) => commands::annotate_serve(a),
        Command::Stats(a) => commands::stats(a, out),
        Command::Run(a) => commands::run(a, out),
    }
}

//! The `lvq` command line: argument parsing, configuration and one
//! function per subcommand. `main.rs` only maps [`run`]'s result to an exit
//! status.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod serve;

use std::ffi::OsString;

use clap::Parser;
use lvq_core::Exec;

use args::{Cli, Command};
use commands::Context;
use config::{need, PipelineConfig};
use error::{CliError, CliResult};

/// Parses `argv` (program name first) and runs the command. Help and
/// version requests print and return `Ok`.
pub fn run<I, T>(argv: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::usage(e.to_string().trim_end().trim_start_matches("error: ").to_string())),
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    // a second call (tests running commands in-process) keeps the first logger
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    let config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    let ctx = Context { config, exec };
    match cli.command {
        Command::Refs(a) => commands::refs(&ctx, a),
        Command::Synth(a) => commands::synth(&ctx, a),
        Command::Classify(a) => commands::classify(&ctx, a),
        Command::Calibrate(a) => commands::calibrate_cmd(&ctx, a),
        Command::Score(a) => commands::score(&ctx, a),
        Command::Plan(a) => commands::plan(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Aggregate(a) => commands::aggregate(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
        Command::Serve(a) => {
            let service = serve::SessionService {
                plans: need(a.plans, ctx.config.paths.plans.clone(), "--plans")?,
                records: need(a.records, ctx.config.paths.records.clone(), "--records")?,
                static_dir: a.static_dir,
            };
            service.prepare()?;
            let (server, addr) = serve::SessionService::bind(&a.addr)?;
            println!("listening on http://{addr}");
            service.run(&server);
            Ok(())
        }
    }
}

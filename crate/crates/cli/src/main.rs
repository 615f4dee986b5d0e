mod config;
mod output;
mod run;

use std::process::ExitCode;

use clap::Parser;
use config::{Cli, Command, ExperimentConfig, Format};
use ncphase::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_ORACLE: u8 = 3;

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::NotConverged { .. }) => EXIT_NOT_CONVERGED,
        Some(Error::TruncationInsufficient { .. }) => EXIT_ORACLE,
        _ if e.is::<run::OracleFailure>() => EXIT_ORACLE,
        _ => EXIT_CONFIG,
    }
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("NCPHASE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("NCPHASE_THREADS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        anyhow::bail!("NCPHASE_THREADS must be positive");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    init_threads()?;
    let cfg = ExperimentConfig::resolve(cli.command, &cli.opts)?;
    let (report, failure) = run::run(&cfg)?;
    let default_format = match cfg.command {
        Command::Dynamics | Command::KernelFit => Format::Csv,
        _ => Format::Json,
    };
    let bytes = report.render(cfg.format.unwrap_or(default_format))?;
    output::emit(cfg.out.as_deref(), &bytes)?;
    failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout with status 0; usage errors are config errors.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

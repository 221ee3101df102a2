mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Output;
use error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError {
                code: error::INTERNAL,
                message: e.to_string(),
            })?;
    }
    let out = Output {
        path: cli.out,
        format: cli.format,
    };
    match &cli.command {
        Command::Spectrum(a) => commands::spectrum_cmd(a, &out),
        Command::Stability(a) => commands::stability_cmd(a, &out),
        Command::Window(a) => commands::window_cmd(a, &out),
        Command::Simulate(a) => commands::simulate_cmd(a, &out),
        Command::Cml(a) => commands::cml_cmd(a, &out),
        Command::MsfCurve(a) => commands::msf_curve_cmd(a, &out),
        Command::Sweep(a) => commands::sweep_cmd(a, &out),
        Command::Verify(a) => commands::verify_cmd(a, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(error::USAGE),
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
        Err(_) => ExitCode::from(error::INTERNAL),
    }
}

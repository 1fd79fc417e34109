use std::io;
use std::process::ExitCode;

use chiral_potts_cli::config::BUDGET_ENV;
use chiral_potts_cli::{execute, CliError, RunConfig};

fn main() -> ExitCode {
    let budget = std::env::var(BUDGET_ENV).ok();
    let result = RunConfig::from_args(std::env::args_os(), budget).and_then(|config| execute(&config, io::stdout().lock()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            match &err {
                CliError::Clap(e) => {
                    let _ = e.print();
                }
                other => eprintln!("cpchain: {other}"),
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

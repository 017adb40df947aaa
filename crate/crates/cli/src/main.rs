use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pqft_cli::{run, Cli, Command, SCHEMA};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let code = match cli.command {
        Command::Schema => {
            print!("{SCHEMA}");
            0
        }
        Command::Run(args) => run(&args, std::env::var_os("PQFT_OUT").map(PathBuf::from)),
    };
    ExitCode::from(code as u8)
}

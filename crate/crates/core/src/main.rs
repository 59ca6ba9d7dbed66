use std::process::ExitCode;

use clap::Parser;
use oarima::cli::{execute, Cli};
use oarima::Error;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(files) => {
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let first_line = e.to_string().lines().next().unwrap_or_default().to_string();
            eprintln!("error: {first_line}");
            match e {
                Error::Usage(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

use std::process::ExitCode;

use clap::Parser;
use piecy_cli::{run, Args, Outcome};

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(Outcome::Report(report)) => {
            let text = report.to_toml();
            match &args.report {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::FAILURE;
                    }
                }
                None => print!("{text}"),
            }
            ExitCode::SUCCESS
        }
        Ok(Outcome::Generated(n)) => {
            eprintln!("wrote {n} points");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

use std::process::ExitCode;

use clap::Parser;
use dosx_core::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let failed: Vec<_> = outcome.assertions.iter().filter(|a| !a.pass).collect();
            println!(
                "{}: {} of {} assertions passed; summary at {}",
                cli.mode.as_str(),
                outcome.assertions.len() - failed.len(),
                outcome.assertions.len(),
                outcome.summary.display()
            );
            for a in &failed {
                println!("FAILED {}: {:.6e} > {:.6e}", a.name, a.measured, a.bound);
            }
            if outcome.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

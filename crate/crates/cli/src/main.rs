use std::process::ExitCode;
use std::time::Instant;

use bellbench_cli::{execute, Args};
use clap::Parser;

fn main() -> ExitCode {
    let args = Args::parse();
    let start = Instant::now();
    match execute(args) {
        Ok(result) => {
            // timing goes to stderr so result files stay byte-identical
            eprintln!("{} finished in {:.3} s", result.scenario, start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bellbench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

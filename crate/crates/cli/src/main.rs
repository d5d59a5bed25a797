use std::process::ExitCode;

use clap::Parser;
use nehari_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("nehari: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli.command) {
        Ok(outcome) => {
            if outcome.exit_code == 0 {
                println!("{}", outcome.message);
            } else {
                eprintln!("nehari: {}", outcome.message);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("nehari: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

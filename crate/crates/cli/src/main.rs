use std::process::ExitCode;

use purify_cli::{parse_config, run, CliError};

fn main() -> ExitCode {
    let result = parse_config(std::env::args_os()).and_then(|cfg| run(&cfg));
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(e)) => e.exit(),
        Err(e) => {
            eprintln!("purify: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use commands::Status;
use config::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config::resolve(cli).and_then(|(config, json)| Ok((commands::run(&config)?, json)));
    match result {
        Ok((output, json)) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&output.json).expect("output serializes"));
            } else {
                print!("{}", output.text);
            }
            match output.status {
                Status::Pass => ExitCode::SUCCESS,
                Status::Fail => ExitCode::from(1),
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

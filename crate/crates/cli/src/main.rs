use std::process::ExitCode;

use clap::Parser;

use bathent_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(cfg) => {
            eprintln!(
                "bathent: {} finished, outputs in {}",
                cfg.command.name(),
                cfg.output_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.structured_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use xor_szilard::cli::{execute, output_path, Cli, OUTPUT_DIR_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    match execute(&cli.command) {
        Ok((out, summary)) => {
            let written = match output_path(&cli.command, env_dir.as_deref()) {
                Some(path) => std::fs::write(&path, out),
                None => std::io::stdout().write_all(out.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error[io]: {e}");
                return ExitCode::from(6);
            }
            eprint!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}

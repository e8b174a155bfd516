use std::io::Write;

use clap::Parser;
use talbot_cli::{run, Cli};

fn main() {
    match run(Cli::parse()) {
        Ok(lines) => {
            let mut out = std::io::stdout().lock();
            for l in lines {
                if writeln!(out, "{}", l.trim_end()).is_err() {
                    break;
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

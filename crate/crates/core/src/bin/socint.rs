use clap::Parser;
use socint::cli::{main_with, Cli};

fn main() {
    let code = match main_with(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}

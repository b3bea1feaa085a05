use clap::Parser;
use retshield_service::cli::{execute, Cli};

fn main() {
    std::process::exit(execute(Cli::parse()));
}

use clap::Parser;

use banditkit::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}

// SPDX-License-Identifier: MIT OR Apache-2.0

use clap::Parser;
use optidrift_cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    std::process::exit(execute(&cli));
}

use std::process::ExitCode;

use clap::Parser;
use orthoport_cli::{main_exit, Cli};

fn main() -> ExitCode {
    main_exit(&Cli::parse())
}

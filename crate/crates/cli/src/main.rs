use clap::Parser;

use rvi_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = rvi_cli::run(&cli) {
        eprintln!("rvi: {e}");
        std::process::exit(e.exit_code());
    }
}

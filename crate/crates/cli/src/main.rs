use clap::Parser;

fn main() {
    // clap exits with status 2 on malformed flags.
    let cli = mimo_harq_cli::Cli::parse();
    std::process::exit(mimo_harq_cli::execute(cli));
}

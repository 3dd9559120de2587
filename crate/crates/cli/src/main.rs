use clap::Parser;

fn main() {
    std::process::exit(ks_cli::run(ks_cli::Cli::parse()));
}

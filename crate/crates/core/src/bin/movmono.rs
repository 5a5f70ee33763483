use clap::Parser;

fn main() {
    std::process::exit(movmono::cli::run(movmono::cli::Cli::parse()));
}

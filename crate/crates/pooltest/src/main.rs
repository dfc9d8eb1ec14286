use clap::Parser;

fn main() {
    if let Err(error) = pooltest::cli::run(pooltest::cli::Cli::parse()) {
        eprintln!("error: {error:#}");
        std::process::exit(1);
    }
}

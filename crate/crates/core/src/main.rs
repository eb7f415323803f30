use clap::Parser;

fn main() {
    let cli = satqkd::cli::Cli::parse();
    std::process::exit(satqkd::cli::main_with(cli));
}

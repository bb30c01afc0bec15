use clap::Parser;

fn main() {
    let cli = nldiff::cli::Cli::parse();
    std::process::exit(nldiff::cli::run(&cli));
}

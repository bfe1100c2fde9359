use clap::Parser;

fn main() {
    let cli = pflab_cli::Cli::parse();
    std::process::exit(pflab_cli::run(&cli));
}

use clap::Parser;

fn main() {
    let cli = qfluct_cli::Cli::parse();
    std::process::exit(qfluct_cli::execute(cli));
}

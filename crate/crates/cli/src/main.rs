use clap::Parser;

fn main() {
    let cli = mzweak_cli::Cli::parse();
    if let Err(e) = mzweak_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

use clap::Parser;

fn main() {
    let cli = cgpcox_cli::Cli::parse();
    if let Err(e) = cgpcox_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

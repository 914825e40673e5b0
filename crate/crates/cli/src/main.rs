use clap::Parser;
use medsum_cli::Cli;

fn main() {
    let cli = Cli::parse();
    match medsum_cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

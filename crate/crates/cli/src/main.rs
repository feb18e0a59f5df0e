use clap::Parser;
use gpi_lab::run::EXIT_ERROR;
use gpi_lab::Cli;

fn main() {
    let cli = Cli::parse();
    let code = match gpi_lab::execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("gpi-lab: {e:#}");
            EXIT_ERROR
        }
    };
    std::process::exit(code);
}

use clap::Parser;

fn main() {
    let cli = bqct::cli::Cli::parse();
    match bqct::cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

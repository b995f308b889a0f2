use clap::Parser;
use dcov_tools::cli::{emit, run, Cli};

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli).and_then(|o| emit(&o, cli.out.as_deref()).map(|_| o.exit_code)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

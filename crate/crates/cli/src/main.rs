use clap::Parser;
use latentscope::{configure_threads, run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = configure_threads().and_then(|()| run(&cli)) {
        eprintln!("latentscope: {e}");
        std::process::exit(e.exit_code());
    }
}

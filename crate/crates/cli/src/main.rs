use clap::Parser;

use gfock_cli::args::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(err) = gfock_cli::configure_threads().and_then(|()| gfock_cli::run(&cli)) {
        eprintln!("gf-sim: {err}");
        std::process::exit(err.exit_code());
    }
}

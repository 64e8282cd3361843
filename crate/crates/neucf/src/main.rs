use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NEUCF_LOG", "warn")).init();
    let cli = neucf::cli::Cli::parse();
    if let Err(e) = neucf::cli::execute(cli) {
        eprintln!("neucf: {e}");
        std::process::exit(e.exit_code());
    }
}

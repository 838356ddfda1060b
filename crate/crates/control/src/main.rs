use clap::Parser;
use edgeflow_control::cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("{}", serde_json::to_string(&e.body()).unwrap_or_else(|_| e.to_string()));
        std::process::exit(1);
    }
}

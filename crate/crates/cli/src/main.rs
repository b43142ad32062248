use clap::Parser;

use qmi_cli::commands::{run, Cli};

fn main() {
    let level = std::env::var("QMI_LOG_LEVEL").unwrap_or_else(|_| "warn".into());
    env_logger::Builder::new().parse_filters(&level).init();
    let cli = Cli::parse();
    if let Err(error) = run(cli) {
        eprintln!("{}", error.to_json());
        std::process::exit(error.exit_code());
    }
}

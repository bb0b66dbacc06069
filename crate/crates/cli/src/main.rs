use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;

use vecont::{run, Cli};
use vecont_core::extraction::{ChatTransport, HttpTransport, LlmConfig, TransportError};

fn http(cfg: &LlmConfig) -> Result<Arc<dyn ChatTransport>, TransportError> {
    Ok(Arc::new(HttpTransport::from_config(cfg)?))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli, &http) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! Regenerates the replay cache shipped with the integration tests.
//!
//! `cargo run -p vecont --example replay_fixture [config]`

use std::path::PathBuf;

use vecont::config::RunConfig;
use vecont::fixture::record_cache;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/replay/vecont.toml")));
    let config = RunConfig::load(&path)?;
    let cache = config.llm.cache_path.clone().ok_or("config has no llm.cache_path")?;
    let scratch = tempfile::tempdir()?;
    let located = record_cache(&config, scratch.path(), &cache)?;
    println!("{located} locations recorded to {}", cache.display());
    Ok(())
}

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use vecont::error::CliError;
use vecont::{run, Cli, Command};
use vecont_core::extraction::{ChatRequest, ChatTransport, LlmConfig, Mode, TransportError};

pub fn fixture_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/replay/vecont.toml")
}

pub fn cli(command: Command, config: &Path, out: &Path, mode: Option<Mode>) -> Cli {
    Cli {
        command,
        config: config.to_path_buf(),
        mode,
        out: Some(out.to_path_buf()),
    }
}

/// Transport that counts every use and never answers.
#[derive(Default)]
pub struct Guard {
    pub built: Arc<AtomicUsize>,
    pub calls: Arc<AtomicUsize>,
}

struct Counting(Arc<AtomicUsize>);

impl ChatTransport for Counting {
    fn complete(&self, _: &ChatRequest) -> Result<String, TransportError> {
        self.0.fetch_add(1, Ordering::SeqCst);
        Err(TransportError::Network("guard transport".into()))
    }
}

impl Guard {
    pub fn factory(&self) -> impl Fn(&LlmConfig) -> Result<Arc<dyn ChatTransport>, TransportError> + 'static {
        let (built, calls) = (self.built.clone(), self.calls.clone());
        move |_| {
            built.fetch_add(1, Ordering::SeqCst);
            Ok(Arc::new(Counting(calls.clone())) as Arc<dyn ChatTransport>)
        }
    }

    pub fn total(&self) -> usize {
        self.built.load(Ordering::SeqCst) + self.calls.load(Ordering::SeqCst)
    }
}

pub fn run_all(out: &Path, guard: &Guard) -> Result<(), CliError> {
    run(&cli(Command::All, &fixture_config(), out, None), &guard.factory())
}

/// Every file under `root`, keyed by relative path.
pub fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

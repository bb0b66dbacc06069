//! The full pipeline over the shipped replay fixture.

mod common;

use std::path::Path;
use std::sync::Arc;

use clap::Parser;

use common::{cli, fixture_config, run_all, snapshot, Guard};
use vecont::artifact::{self, Store};
use vecont::config::RunConfig;
use vecont::error::CliError;
use vecont::figures::{build_all, Payload};
use vecont::fixture::record_cache;
use vecont::report::read_figures;
use vecont::stages::Analyses;
use vecont::{run, Cli, Command};
use vecont_core::extraction::{ChatRequest, ChatTransport, LlmConfig, Mode, TransportError};

#[test]
fn shipped_cache_regenerates_byte_identically() {
    let config = RunConfig::load(&fixture_config()).unwrap();
    let shipped = std::fs::read(config.llm.cache_path.as_ref().unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let located = record_cache(&config, &dir.path().join("scratch"), &cache).unwrap();
    assert!(located > 2300, "{located}");
    assert!(std::fs::read(&cache).unwrap() == shipped, "rerun `cargo run -p vecont --example replay_fixture`");
}

#[test]
fn replay_is_offline_and_reproducible() {
    let guard = Guard::default();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_all(a.path(), &guard).unwrap();
    run_all(b.path(), &guard).unwrap();
    assert_eq!(guard.total(), 0);
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (k, v) in &sa {
        assert!(v == &sb[k], "{k} differs between runs");
    }
    assert!(sa.contains_key(artifact::REPORT));
    assert_eq!(sa.keys().filter(|k| k.starts_with("figures/")).count(), 14);
}

#[test]
fn mode_and_out_flags_parse() {
    let c = Cli::try_parse_from(["vecont", "extract", "--mode", "record", "--out", "/tmp/x"]).unwrap();
    assert_eq!(c.command, Command::Extract);
    assert_eq!(c.mode, Some(Mode::Record));
    assert_eq!(c.config, Path::new("vecont.toml"));
    assert!(Cli::try_parse_from(["vecont", "extract", "--mode", "offline"]).is_err());
}

#[test]
fn missing_upstream_artifact_names_the_stage() {
    let out = tempfile::tempdir().unwrap();
    let guard = Guard::default();
    let err = run(&cli(Command::Consistency, &fixture_config(), out.path(), None), &guard.factory()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let CliError::MissingArtifact { stage, .. } = &err else { panic!("{err}") };
    assert_eq!(*stage, "fit");
    assert!(err.to_string().contains("vecont fit"));
}

#[test]
fn invalid_config_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "seed = 1\ngenres = []\n[ontology]\nbins = 0\nmax_bins = 0\n[analysis]\nsample_cap = 0\n",
    )
    .unwrap();
    let guard = Guard::default();
    let err = run(&cli(Command::All, &path, dir.path(), None), &guard.factory()).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    let CliError::Validation(list) = &err else { panic!("{err}") };
    // Empty genres, missing corpus, bins, max_bins, sample_cap.
    assert_eq!(list.len(), 5, "{list:#?}");
}

struct Unauthorised;

impl ChatTransport for Unauthorised {
    fn complete(&self, _: &ChatRequest) -> Result<String, TransportError> {
        Err(TransportError::Http {
            status: 401,
            body: "bad key".into(),
        })
    }
}

#[test]
fn network_failures_exit_3_after_writing_extractions() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = fixture_config();
    let shipped = std::fs::read_to_string(fixture.with_file_name("cache.jsonl")).unwrap();
    let trimmed: String = shipped.lines().skip(1).map(|l| format!("{l}\n")).collect();
    std::fs::write(dir.path().join("cache.jsonl"), trimmed).unwrap();
    let config = dir.path().join("vecont.toml");
    std::fs::copy(&fixture, &config).unwrap();

    let guard = Guard::default();
    let out = dir.path().join("out");
    for command in [Command::Synth, Command::Ingest, Command::Fit] {
        run(&cli(command, &config, &out, None), &guard.factory()).unwrap();
    }
    let factory = |_: &LlmConfig| Ok(Arc::new(Unauthorised) as Arc<dyn ChatTransport>);
    let err = run(&cli(Command::Extract, &config, &out, Some(Mode::Record)), &factory).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
    assert!(out.join(artifact::EXTRACTIONS.0).is_file());
}

#[test]
fn figure_files_are_well_formed() {
    let out = tempfile::tempdir().unwrap();
    run_all(out.path(), &Guard::default()).unwrap();
    let config = RunConfig::load(&fixture_config()).unwrap();
    let mut config = config;
    config.out_dir = out.path().to_path_buf();
    let store = Store::new(&config);
    let figures = read_figures(&store).unwrap();
    assert_eq!(figures.len(), 14);
    for f in &figures {
        f.check().unwrap();
        assert_eq!(f.config_hash, config.hash);
        assert!(!f.sources.is_empty());
        let bytes = std::fs::read(store.path(&f.sources[0].artifact)).unwrap();
        assert_eq!(vecont_core::extraction::sha256_hex(&bytes), f.sources[0].sha256, "{}", f.figure);
    }
    for name in ["fig07_volume_mean_radius", "fig08_volume_max_radius"] {
        let f = figures.iter().find(|f| f.figure == name).unwrap();
        assert!(f.axes.log_y);
        let Payload::BarPerGenre { series, log_floor, .. } = &f.payload else { panic!() };
        let floor = log_floor.unwrap();
        assert!(series[0].values.iter().all(|&v| v == 0.0 || v > floor));
    }
    let heat = figures.iter().find(|f| f.figure == "fig10_heatmaps").unwrap();
    let Payload::HeatmapOverlay { panels } = &heat.payload else { panic!() };
    assert_eq!(panels.len(), config.heatmap_genres.len());
    assert!(panels.iter().all(|p| p.cells.len() == config.analysis.heatmap_grid));

    // A one-genre report still draws its bar against the baseline line.
    let mut analyses = Analyses::load(&store).unwrap();
    analyses.consistency.0.genres.truncate(1);
    let single = build_all(&config.hash, &config.heatmap_genres, &analyses);
    let fig4 = single.iter().find(|f| f.figure == "fig04_centroid_distance").unwrap();
    fig4.check().unwrap();
    let Payload::BarPerGenre { genres, series, .. } = &fig4.payload else { panic!() };
    assert_eq!(genres.len(), 1);
    assert_eq!(series[0].values.len(), 1);
    let reference = series[0].reference.unwrap();
    assert!(reference.mean > series[0].values[0]);
}

#[test]
fn report_tables_have_stable_headers() {
    let out = tempfile::tempdir().unwrap();
    run_all(out.path(), &Guard::default()).unwrap();
    let header = |name: &str| {
        let path = out.path().join(artifact::TABLES).join(format!("{name}.csv"));
        let mut r = csv::Reader::from_path(path).unwrap();
        let h: Vec<String> = r.headers().unwrap().iter().map(str::to_string).collect();
        (h, r.records().count())
    };
    let (h, rows) = header("consistency");
    assert_eq!(&h[..3], ["genre", "total_queries", "successful_queries"]);
    assert_eq!(h.len(), 3 + vecont_core::analysis::METRICS.len());
    assert_eq!(rows, 50);
    let (h, rows) = header("consistency_comparisons");
    assert_eq!(h[0], "metric");
    assert!(h.contains(&"p_value".to_string()) && h.contains(&"cohens_d".to_string()));
    assert_eq!(rows, vecont_core::analysis::METRICS.len());
    assert_eq!(header("shift_comparisons").1, 2);
    assert_eq!(header("extraction_counts").1, 50);
    assert_eq!(header("shift").1, 47);
    assert_eq!(header("accuracy").0, ["genre", "ground_truth_weight", "euclidean", "cosine_raw", "cosine_shifted"]);
}

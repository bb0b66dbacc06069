//! Summary report, CSV tables and figure data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use vecont_core::stats::ComparisonResult;

use crate::artifact::{self, inputs, Store};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::figures::{self, FigureData};
use crate::stages::Analyses;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSummary {
    pub genres: usize,
    pub formulations: usize,
    pub successful: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportData {
    pub extraction: ExtractionSummary,
    /// Keyed `suite/metric`.
    pub comparisons: BTreeMap<String, ComparisonResult>,
    pub tables: Vec<String>,
    pub figures: Vec<String>,
}

const COMPARISON_HEADER: [&str; 12] = [
    "metric",
    "observed_n",
    "baseline_n",
    "observed_mean",
    "observed_median",
    "baseline_mean",
    "baseline_median",
    "t",
    "df",
    "p_value",
    "cohens_d",
    "note",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn comparison_row(name: &str, c: &ComparisonResult) -> Vec<String> {
    vec![
        name.to_string(),
        c.observed_n.to_string(),
        c.baseline_n.to_string(),
        opt(c.observed_mean),
        opt(c.observed_median),
        opt(c.baseline_mean),
        opt(c.baseline_median),
        opt(c.t),
        opt(c.df),
        opt(c.p_value),
        opt(c.cohens_d),
        c.note.clone().unwrap_or_default(),
    ]
}

struct Table {
    name: &'static str,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &'static str, header: &[&str]) -> Self {
        Self {
            name,
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn comparisons<'a>(name: &'static str, entries: impl IntoIterator<Item = (&'a str, &'a ComparisonResult)>) -> Self {
        let mut t = Self::new(name, &COMPARISON_HEADER);
        t.rows = entries.into_iter().map(|(m, c)| comparison_row(m, c)).collect();
        t
    }

    fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(CliError::stage)?;
        for r in &self.rows {
            w.write_record(r).map_err(CliError::stage)?;
        }
        w.into_inner().map_err(CliError::stage)
    }
}

fn tables(a: &Analyses) -> Vec<Table> {
    let ex = &a.extractions.0;
    let cons = &a.consistency.0;
    let acc = &a.accuracy.0;
    let dist = &a.distribution.0;
    let shift = &a.shift.0;

    let mut counts = Table::new("extraction_counts", &["genre", "attempted", "successful", "unique", "failed"]);
    for s in &ex.sets {
        let unique = s.results.values().collect::<std::collections::BTreeSet<_>>().len();
        counts.rows.push(vec![
            s.genre.clone(),
            s.attempted().to_string(),
            s.results.len().to_string(),
            unique.to_string(),
            s.failures.len().to_string(),
        ]);
    }

    let mut header = vec!["genre", "total_queries", "successful_queries"];
    header.extend(vecont_core::analysis::METRICS);
    let mut consistency = Table::new("consistency", &header);
    for g in &cons.genres {
        let mut row = vec![g.genre.clone(), g.total_queries.to_string(), g.successful_queries.to_string()];
        row.extend(vecont_core::analysis::METRICS.iter().map(|m| opt(g.metrics.get(m))));
        consistency.rows.push(row);
    }

    let mut accuracy = Table::new(
        "accuracy",
        &["genre", "ground_truth_weight", "euclidean", "cosine_raw", "cosine_shifted"],
    );
    for g in &acc.genres {
        accuracy.rows.push(vec![
            g.genre.clone(),
            g.ground_truth_weight.to_string(),
            format!("{:?}", g.euclidean),
            format!("{:?}", g.cosine_raw),
            opt(g.cosine_shifted),
        ]);
    }

    let mut distribution = Table::new("distribution", &["genre", "grouping", "label", "songs"]);
    for g in &dist.genres {
        for (grouping, counts) in [("raw", &g.raw), ("grouped", &g.grouped)] {
            for (label, n) in counts {
                distribution.rows.push(vec![g.genre.clone(), grouping.into(), label.clone(), n.to_string()]);
            }
        }
    }

    let mut shift_table = Table::new(
        "shift",
        &[
            "formulation",
            "genres",
            "zero_vectors",
            "insufficient_genres",
            "global_mean_cosine",
            "knn_mean_cosine",
            "baseline_global_mean",
            "baseline_knn_mean",
        ],
    );
    for f in &shift.formulations {
        shift_table.rows.push(vec![
            f.formulation.clone(),
            f.genres.to_string(),
            f.zero_vectors.to_string(),
            f.insufficient_genres.to_string(),
            opt(f.global_mean_cosine),
            opt(f.knn_mean_cosine),
            opt(f.baseline_global_mean),
            opt(f.baseline_knn_mean),
        ]);
    }

    vec![
        counts,
        consistency,
        Table::comparisons("consistency_comparisons", cons.comparisons.iter().map(|(k, v)| (k.as_str(), v))),
        accuracy,
        Table::comparisons("accuracy_comparisons", acc.comparisons.iter().map(|(k, v)| (k.as_str(), v))),
        distribution,
        shift_table,
        Table::comparisons("shift_comparisons", [("global", &shift.global), ("knn", &shift.knn)]),
    ]
}

/// Writes the tables, every figure file and `report/report.json`.
pub fn write_all(store: &Store, config: &RunConfig, a: &Analyses) -> Result<(), CliError> {
    let mut table_names = Vec::new();
    for t in tables(a) {
        let rel = format!("{}/{}.csv", artifact::TABLES, t.name);
        store.write_bytes(&rel, &t.to_csv()?)?;
        table_names.push(rel);
    }

    let mut figure_names = Vec::new();
    for f in figures::build_all(&config.hash, &config.heatmap_genres, a) {
        f.check().map_err(CliError::Stage)?;
        let rel = format!("{}/{}", artifact::FIGURES, f.file_name());
        store.write_json(&rel, &f)?;
        figure_names.push(rel);
    }

    let ex = &a.extractions.0;
    let mut comparisons = BTreeMap::new();
    for (k, v) in &a.consistency.0.comparisons {
        comparisons.insert(format!("consistency/{k}"), v.clone());
    }
    for (k, v) in &a.accuracy.0.comparisons {
        comparisons.insert(format!("accuracy/{k}"), v.clone());
    }
    comparisons.insert("shift/global".into(), a.shift.0.global.clone());
    comparisons.insert("shift/knn".into(), a.shift.0.knn.clone());
    let data = ReportData {
        extraction: ExtractionSummary {
            genres: ex.sets.len(),
            formulations: ex.formulations.len(),
            successful: ex.sets.iter().map(|s| s.results.len()).sum(),
            failed: ex.sets.iter().map(|s| s.failures.len()).sum(),
        },
        comparisons,
        tables: table_names,
        figures: figure_names,
    };
    let ins = inputs([
        (artifact::EXTRACTIONS.0, a.extractions.1.as_str()),
        (artifact::CONSISTENCY.0, a.consistency.1.as_str()),
        (artifact::ACCURACY.0, a.accuracy.1.as_str()),
        (artifact::DISTRIBUTION.0, a.distribution.1.as_str()),
        (artifact::SHIFT.0, a.shift.1.as_str()),
        (artifact::PROJECTION.0, a.projection.1.as_str()),
    ]);
    store.write_json(artifact::REPORT, &store.wrap("report", ins, data))?;
    Ok(())
}

/// Reads every figure file back from the output directory.
pub fn read_figures(store: &Store) -> Result<Vec<FigureData>, CliError> {
    let dir = store.path(artifact::FIGURES);
    let mut paths: Vec<_> = std::fs::read_dir(&dir)
        .map_err(|e| CliError::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
            serde_json::from_slice(&bytes).map_err(|e| CliError::io(p, format!("unreadable figure: {e}")))
        })
        .collect()
}

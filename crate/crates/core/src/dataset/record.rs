//! Song records and corpus ingestion from JSONL (canonical) or CSV.
//!
//! JSONL line schema:
//! `{"id", "title", "artists": [{"name", "genres": [...]}], "features": {"danceability": ..., ...}}`
//!
//! CSV needs `id`, `genres` and one column per dimension; `title` and
//! `artists` are optional. List cells use `;` as delimiter.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::DatasetError;
use crate::ontology::{DimensionDomain, FeatureVector};

const LIST_DELIMITER: char = ';';

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artist {
    pub name: String,
    #[serde(default)]
    pub genres: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SongRecord {
    pub id: String,
    pub title: String,
    pub artists: Vec<Artist>,
    /// Union of the genres of every artist on the song.
    pub artist_genres: BTreeSet<String>,
    pub features: FeatureVector,
}

impl SongRecord {
    pub fn new(id: impl Into<String>, title: impl Into<String>, artists: Vec<Artist>, features: FeatureVector) -> Self {
        let artist_genres = artists.iter().flat_map(|a| a.genres.iter().cloned()).collect();
        Self {
            id: id.into(),
            title: title.into(),
            artists,
            artist_genres,
            features,
        }
    }

    pub fn to_json_value(&self, domains: &[DimensionDomain]) -> Value {
        let features: Map<String, Value> = domains
            .iter()
            .zip(self.features.values())
            .map(|(d, &v)| (d.name.clone(), Value::from(v)))
            .collect();
        serde_json::json!({
            "id": self.id,
            "title": self.title,
            "artists": self.artists,
            "features": features,
        })
    }

    pub fn to_jsonl(&self, domains: &[DimensionDomain]) -> String {
        self.to_json_value(domains).to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "jsonl" | "ndjson" => Some(Self::Jsonl),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: usize,
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub records: Vec<SongRecord>,
    pub rejected: Vec<Rejection>,
}

pub fn ingest(path: &Path, format: CorpusFormat, domains: &[DimensionDomain]) -> Result<IngestOutcome, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(file), domains),
        CorpusFormat::Csv => read_csv(file, domains),
    }
}

/// Keeps ids unique and features in range; everything else is rejected
/// and counted rather than aborting the whole ingest.
struct Collector<'a> {
    domains: &'a [DimensionDomain],
    seen: HashSet<String>,
    out: IngestOutcome,
}

impl<'a> Collector<'a> {
    fn new(domains: &'a [DimensionDomain]) -> Self {
        Self {
            domains,
            seen: HashSet::new(),
            out: IngestOutcome::default(),
        }
    }

    fn reject(&mut self, line: usize, id: Option<&str>, reason: String) {
        self.out.rejected.push(Rejection {
            line,
            id: id.map(str::to_string),
            reason,
        });
    }

    fn accept(&mut self, line: usize, id: String, title: String, artists: Vec<Artist>, values: Vec<Option<f64>>) {
        if id.trim().is_empty() {
            return self.reject(line, None, "empty id".into());
        }
        let mut features = Vec::with_capacity(values.len());
        for (d, v) in self.domains.iter().zip(values) {
            match v {
                None => return self.reject(line, Some(&id), format!("missing feature `{}`", d.name)),
                Some(x) if !(x >= d.min && x <= d.max) => {
                    return self.reject(
                        line,
                        Some(&id),
                        format!("feature `{}` = {x} outside [{}, {}]", d.name, d.min, d.max),
                    )
                }
                Some(x) => features.push(x),
            }
        }
        if !self.seen.insert(id.clone()) {
            return self.reject(line, Some(&id), "duplicate id".into());
        }
        self.out
            .records
            .push(SongRecord::new(id, title, artists, FeatureVector(features)));
    }
}

pub fn read_jsonl<R: BufRead>(reader: R, domains: &[DimensionDomain]) -> Result<IngestOutcome, DatasetError> {
    let mut collector = Collector::new(domains);
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| DatasetError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| DatasetError::Parse { line: line_no, message };
        let value: Value = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| parse_err("record is not a JSON object".into()))?;
        let missing: Vec<String> = ["id", "artists", "features"]
            .iter()
            .filter(|k| !obj.contains_key(**k))
            .map(|k| k.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(DatasetError::Schema { line: line_no, missing });
        }
        let id = obj["id"]
            .as_str()
            .ok_or_else(|| parse_err("`id` must be a string".into()))?
            .to_string();
        let title = obj.get("title").and_then(Value::as_str).unwrap_or_default().to_string();
        let artists: Vec<Artist> =
            serde_json::from_value(obj["artists"].clone()).map_err(|e| parse_err(format!("`artists`: {e}")))?;
        let features = obj["features"]
            .as_object()
            .ok_or_else(|| parse_err("`features` must be an object".into()))?;
        let values = domains
            .iter()
            .map(|d| features.get(&d.name).and_then(Value::as_f64))
            .collect();
        collector.accept(line_no, id, title, artists, values);
    }
    Ok(collector.out)
}

fn split_list(cell: &str) -> Vec<String> {
    cell.split(LIST_DELIMITER)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// CSV rows carry one genre cell for the whole song, so every listed
/// artist receives the full genre set; the per-song union is unchanged.
pub fn read_csv<R: Read>(reader: R, domains: &[DimensionDomain]) -> Result<IngestOutcome, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| DatasetError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let mut missing = Vec::new();
    let mut required = |name: &str| {
        let pos = column(name);
        if pos.is_none() {
            missing.push(name.to_string());
        }
        pos
    };
    let id_col = required("id");
    let genres_col = required("genres");
    let feature_cols: Vec<Option<usize>> = domains.iter().map(|d| required(&d.name)).collect();
    if !missing.is_empty() {
        return Err(DatasetError::Schema { line: 1, missing });
    }
    let (id_col, genres_col) = (id_col.unwrap_or_default(), genres_col.unwrap_or_default());
    let title_col = column("title");
    let artists_col = column("artists");

    let mut collector = Collector::new(domains);
    for (i, row) in rdr.records().enumerate() {
        let line_no = i + 2;
        let row = row.map_err(|e| DatasetError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let cell = |c: usize| row.get(c).unwrap_or_default();
        let genres = split_list(cell(genres_col));
        let mut names = artists_col.map(|c| split_list(cell(c))).unwrap_or_default();
        if names.is_empty() {
            names.push(String::new());
        }
        let artists = names
            .into_iter()
            .map(|name| Artist {
                name,
                genres: genres.clone(),
            })
            .collect();
        let values = feature_cols
            .iter()
            .map(|c| c.and_then(|c| cell(c).parse::<f64>().ok()))
            .collect();
        let title = title_col.map(|c| cell(c).to_string()).unwrap_or_default();
        collector.accept(line_no, cell(id_col).to_string(), title, artists, values);
    }
    Ok(collector.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn domains() -> Vec<DimensionDomain> {
        DimensionDomain::audio_features()
    }

    const FEATURES: &str = r#""features":{"danceability":0.3,"energy":0.2,"speechiness":0.0,"acousticness":0.9,"instrumentalness":0.9,"liveness":0.1,"valence":0.2,"tempo":95}"#;

    fn line(id: &str, genres: &str) -> String {
        format!(r#"{{"id":"{id}","title":"t","artists":[{{"name":"a","genres":[{genres}]}},{{"name":"b","genres":["x"]}}],{FEATURES}}}"#)
    }

    #[test]
    fn jsonl_fixture_yields_every_record() {
        let text = [line("1", r#""jazz""#), line("2", r#""pop""#), line("3", "")].join("\n");
        let out = read_jsonl(text.as_bytes(), &domains()).unwrap();
        assert_eq!(out.records.len(), 3);
        assert!(out.rejected.is_empty());
        let genres: Vec<_> = out.records[0].artist_genres.iter().cloned().collect();
        assert_eq!(genres, vec!["jazz", "x"]);
        assert_eq!(out.records[0].features.values()[7], 95.0);
    }

    #[test]
    fn out_of_range_and_duplicate_rows_are_counted() {
        let bad = line("2", "").replace("\"danceability\":0.3", "\"danceability\":1.7");
        let missing = line("3", "").replace("\"tempo\":95", "\"tempo\":null");
        let text = [line("1", ""), bad, missing, line("1", "")].join("\n");
        let out = read_jsonl(text.as_bytes(), &domains()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.rejected.len(), 3);
        assert!(out.rejected[0].reason.contains("danceability"));
        assert_eq!(out.rejected[0].line, 2);
        assert!(out.rejected[1].reason.contains("missing feature `tempo`"));
        assert_eq!(out.rejected[2].reason, "duplicate id");
    }

    #[test]
    fn malformed_json_reports_its_line() {
        let text = format!("{}\n{{not json", line("1", ""));
        match read_jsonl(text.as_bytes(), &domains()) {
            Err(DatasetError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match read_jsonl(r#"{"title":"x"}"#.as_bytes(), &domains()) {
            Err(DatasetError::Schema { line: 1, missing }) => {
                assert_eq!(missing, vec!["id", "artists", "features"])
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_genre_cells_split_on_semicolons() {
        let text = "id,title,artists,genres,danceability,energy,speechiness,acousticness,instrumentalness,liveness,valence,tempo\n\
                    s1,Take Five,Dave Brubeck,jazz;vocal jazz,0.5,0.3,0.05,0.8,0.4,0.1,0.6,172\n";
        let out = read_csv(text.as_bytes(), &domains()).unwrap();
        assert_eq!(out.records.len(), 1);
        let genres: Vec<_> = out.records[0].artist_genres.iter().map(String::as_str).collect();
        assert_eq!(genres, vec!["jazz", "vocal jazz"]);
    }

    #[test]
    fn csv_schema_errors_list_every_missing_column() {
        let text = "id,title,danceability\nx,y,0.1\n";
        match read_csv(text.as_bytes(), &domains()) {
            Err(DatasetError::Schema { missing, .. }) => {
                assert_eq!(missing.len(), 8);
                assert_eq!(missing[0], "genres");
                assert!(missing.contains(&"tempo".to_string()));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn jsonl_writer_round_trips() {
        let text = line("1", r#""jazz","blues""#);
        let rec = read_jsonl(text.as_bytes(), &domains()).unwrap().records.remove(0);
        let again = read_jsonl(rec.to_jsonl(&domains()).as_bytes(), &domains()).unwrap();
        assert_eq!(again.records, vec![rec]);
    }
}

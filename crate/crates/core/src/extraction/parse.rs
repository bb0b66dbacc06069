//! Validation of model completions into grid positions.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ontology::{DiscretePosition, Ontology};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseError {
    #[error("no JSON value found: {detail}")]
    MalformedJson { detail: String },
    #[error("JSON has no `location` entry")]
    MissingLocation,
    #[error("location is missing dimension `{dimension}`")]
    MissingDimension { dimension: String },
    #[error("`{dimension}` index {value} outside 0..{bins}")]
    IndexOutOfRange { dimension: String, value: i64, bins: usize },
    #[error("location list has {actual} entries, expected {expected}")]
    WrongArity { expected: usize, actual: usize },
    #[error("`{dimension}` value {value} is not an integer index")]
    InvalidIndex { dimension: String, value: String },
}

/// Reads `{"location": {dim: index, ...}}` or `{"location": [i0, ...]}`.
///
/// Dimension keys match case-insensitively; extra keys are ignored. The JSON
/// may sit inside a fenced block or surrounding prose. A bare list is read
/// as the list form of `location`. Indices are never clamped.
pub fn parse_position(raw: &str, ontology: &Ontology) -> Result<DiscretePosition, ParseError> {
    let value = locate_json(raw)?;
    let location = match &value {
        Value::Object(map) => map
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case("location"))
            .map(|(_, v)| v)
            .ok_or(ParseError::MissingLocation)?,
        Value::Array(_) => &value,
        _ => return Err(ParseError::MissingLocation),
    };
    let names: Vec<&str> = ontology.dimension_names().collect();
    let bins = ontology.bins_per_dim();
    let values: Vec<(&str, &Value)> = match location {
        Value::Object(map) => names
            .iter()
            .map(|&name| {
                map.iter()
                    .find(|(k, _)| k.trim().eq_ignore_ascii_case(name))
                    .map(|(_, v)| (name, v))
                    .ok_or_else(|| ParseError::MissingDimension {
                        dimension: name.to_string(),
                    })
            })
            .collect::<Result<_, _>>()?,
        Value::Array(items) => {
            if items.len() != names.len() {
                return Err(ParseError::WrongArity {
                    expected: names.len(),
                    actual: items.len(),
                });
            }
            names.iter().copied().zip(items.iter()).collect()
        }
        _ => return Err(ParseError::MissingLocation),
    };
    let indices = values
        .into_iter()
        .map(|(name, v)| {
            let index = as_index(v).ok_or_else(|| ParseError::InvalidIndex {
                dimension: name.to_string(),
                value: v.to_string(),
            })?;
            if index < 0 || index >= bins as i64 {
                return Err(ParseError::IndexOutOfRange {
                    dimension: name.to_string(),
                    value: index,
                    bins,
                });
            }
            Ok(index as u16)
        })
        .collect::<Result<_, _>>()?;
    Ok(DiscretePosition(indices))
}

fn as_index(v: &Value) -> Option<i64> {
    match v {
        Value::Number(n) => n.as_i64().or_else(|| {
            let f = n.as_f64()?;
            (f.fract() == 0.0 && f.abs() < 1e15).then_some(f as i64)
        }),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Canonical dict-form completion for `p`; `parse_position` inverts it.
pub fn render_position(p: &DiscretePosition, ontology: &Ontology) -> String {
    let fields: Vec<String> = ontology
        .dimension_names()
        .zip(p.indices())
        .map(|(name, i)| format!("{}: {i}", Value::from(name)))
        .collect();
    format!("{{\"location\": {{{}}}}}", fields.join(", "))
}

fn locate_json(raw: &str) -> Result<Value, ParseError> {
    let text = raw.trim();
    if text.is_empty() {
        return Err(ParseError::MalformedJson {
            detail: "empty response".into(),
        });
    }
    if let Ok(v) = serde_json::from_str(text) {
        return Ok(v);
    }
    for block in fenced_blocks(text) {
        if let Ok(v) = serde_json::from_str(block) {
            return Ok(v);
        }
    }
    for candidate in balanced_spans(text) {
        if let Ok(v) = serde_json::from_str(candidate) {
            return Ok(v);
        }
    }
    let head: String = text.chars().take(80).collect();
    Err(ParseError::MalformedJson {
        detail: format!("response starts with {head:?}"),
    })
}

fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("```") {
        let after = &rest[start + 3..];
        let body_start = after.find('\n').map_or(0, |i| i + 1);
        let body = &after[body_start..];
        let Some(end) = body.find("```") else { break };
        out.push(body[..end].trim());
        rest = &body[end + 3..];
    }
    out
}

/// Every top-level `{...}` or `[...]` span, skipping brackets inside strings.
fn balanced_spans(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut stack: Vec<u8> = Vec::new();
    let (mut in_string, mut escape, mut start) = (false, false, 0);
    for (i, &b) in bytes.iter().enumerate() {
        if in_string {
            match (escape, b) {
                (true, _) => escape = false,
                (false, b'\\') => escape = true,
                (false, b'"') => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' if !stack.is_empty() => in_string = true,
            b'{' | b'[' => {
                if stack.is_empty() {
                    start = i;
                }
                stack.push(b);
            }
            b'}' | b']' => {
                let open = if b == b'}' { b'{' } else { b'[' };
                if stack.last() == Some(&open) {
                    stack.pop();
                    if stack.is_empty() {
                        spans.push(&text[start..=i]);
                    }
                } else {
                    stack.clear();
                }
            }
            _ => {}
        }
    }
    // Objects before lists: a prose "[note]" should not shadow the payload.
    spans.sort_by_key(|s| !s.starts_with('{'));
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn o() -> Ontology {
        Ontology::audio_reference()
    }

    #[test]
    fn dict_form() {
        let raw = r#"{"location": {"danceability":0,"energy":0,"speechiness":0,"acousticness":3,"instrumentalness":4,"liveness":1,"valence":0,"tempo":0}}"#;
        assert_eq!(parse_position(raw, &o()).unwrap().0, vec![0, 0, 0, 3, 4, 1, 0, 0]);
    }

    #[test]
    fn list_form_and_bare_list() {
        assert_eq!(parse_position(r#"{"location": [5,5,5,5,5,5,5,5]}"#, &o()).unwrap().0, vec![5; 8]);
        assert_eq!(parse_position("[0,0,0,3,4,1,0,0]", &o()).unwrap().0, vec![0, 0, 0, 3, 4, 1, 0, 0]);
        assert_eq!(
            parse_position(r#"{"location": [1,2,3]}"#, &o()),
            Err(ParseError::WrongArity { expected: 8, actual: 3 })
        );
    }

    #[test]
    fn keys_are_case_insensitive_and_reordered() {
        let raw = r#"{"Location": {"TEMPO": 2, "Valence": 1, "liveness": 0, "instrumentalness": 0,
            "acousticness": 0, "speechiness": 0, "energy": 4, "Danceability": 3, "extra": 9}}"#;
        assert_eq!(parse_position(raw, &o()).unwrap().0, vec![3, 4, 0, 0, 0, 0, 1, 2]);
    }

    #[test]
    fn embedded_and_fenced_json() {
        let body = r#"{"location": [1,1,1,1,1,1,1,1]}"#;
        let fenced = format!("Sure! Here you go:\n```json\n{body}\n```\nEnjoy.");
        assert_eq!(parse_position(&fenced, &o()).unwrap().0, vec![1; 8]);
        let prose = format!("I'd place it [roughly] at {body} in the space.");
        assert_eq!(parse_position(&prose, &o()).unwrap().0, vec![1; 8]);
    }

    #[test]
    fn distinct_errors() {
        let o = o();
        assert!(matches!(parse_position("no json here", &o), Err(ParseError::MalformedJson { .. })));
        assert!(matches!(parse_position("{\"location\": {", &o), Err(ParseError::MalformedJson { .. })));
        assert_eq!(parse_position(r#"{"position": [0]}"#, &o), Err(ParseError::MissingLocation));
        assert_eq!(
            parse_position(r#"{"location": {"danceability": 1}}"#, &o),
            Err(ParseError::MissingDimension { dimension: "energy".into() })
        );
        let seven = r#"{"location": {"danceability":7,"energy":0,"speechiness":0,"acousticness":0,"instrumentalness":0,"liveness":0,"valence":0,"tempo":0}}"#;
        assert_eq!(
            parse_position(seven, &o),
            Err(ParseError::IndexOutOfRange { dimension: "danceability".into(), value: 7, bins: 6 })
        );
        assert!(matches!(
            parse_position(r#"{"location": [0,0,0,0,0,0,0,-1]}"#, &o),
            Err(ParseError::IndexOutOfRange { value: -1, .. })
        ));
        assert!(matches!(
            parse_position(r#"{"location": [0,0,0,0,0,0,0,1.5]}"#, &o),
            Err(ParseError::InvalidIndex { .. })
        ));
    }

    proptest! {
        #[test]
        fn render_then_parse_round_trips(idx in prop::collection::vec(0u16..6, 8)) {
            let p = DiscretePosition(idx);
            prop_assert_eq!(parse_position(&render_position(&p, &o()), &o()).unwrap(), p);
        }
    }
}

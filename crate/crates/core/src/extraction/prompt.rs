use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ExtractionError;
use crate::ontology::Ontology;

pub const PLACEHOLDER: &str = "{genre}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulationTemplate {
    pub id: String,
    pub template: String,
}

impl FormulationTemplate {
    pub fn new(id: impl Into<String>, template: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            template: template.into(),
        }
    }

    pub fn instantiate(&self, genre: &str) -> String {
        self.template.replace(PLACEHOLDER, genre)
    }
}

/// Checks placeholder count and id uniqueness, reporting every violation.
pub fn validate_formulations(formulations: &[FormulationTemplate]) -> Result<(), ExtractionError> {
    let mut problems = Vec::new();
    if formulations.is_empty() {
        problems.push("no formulations configured".to_string());
    }
    let mut seen = HashSet::new();
    for f in formulations {
        let count = f.template.matches(PLACEHOLDER).count();
        if count != 1 {
            problems.push(format!("`{}` has {count} `{PLACEHOLDER}` placeholders", f.id));
        }
        if !seen.insert(f.id.as_str()) {
            problems.push(format!("duplicate formulation id `{}`", f.id));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(ExtractionError::InvalidFormulations(problems))
    }
}

const FAMILIES: &[(&str, &[&str])] = &[
    (
        "direct",
        &["{genre}", "{genre} music", "{genre} songs", "some {genre}", "{genre} please"],
    ),
    (
        "emotional",
        &[
            "I'm feeling {genre}",
            "I feel like {genre} today",
            "My heart wants {genre}",
            "I'm feeling kind of {genre} right now",
            "Today feels like a {genre} day",
            "I'm emotionally in a {genre} place",
            "I'm in a {genre} state of mind",
            "I'm vibing with {genre}",
        ],
    ),
    (
        "mood",
        &[
            "I'm in the mood for {genre} music",
            "I'm in a {genre} mood",
            "Set a {genre} mood",
            "Something with a {genre} mood please",
            "My mood calls for {genre}",
            "Give me {genre} vibes",
            "I need a {genre} atmosphere",
            "Match my {genre} mood",
        ],
    ),
    (
        "action",
        &[
            "Find me {genre} music",
            "Play me {genre} songs",
            "Queue up some {genre}",
            "Put on some {genre}",
            "Start a {genre} playlist",
            "Recommend {genre} tracks",
            "Shuffle some {genre} for me",
            "Spin some {genre} records",
            "Search for {genre} songs",
            "Play something {genre}",
        ],
    ),
    (
        "preference",
        &[
            "I want {genre} music",
            "I'd like to hear {genre}",
            "I love {genre}",
            "I prefer {genre} music",
            "{genre} is my favorite",
            "I'm really into {genre} lately",
            "I could go for some {genre}",
            "Nothing but {genre} for me",
        ],
    ),
    (
        "context",
        &[
            "Let's chill with some {genre} music",
            "{genre} for my workout",
            "Background {genre} for studying",
            "{genre} for a road trip",
            "{genre} for a dinner party",
            "Something {genre} for tonight",
            "{genre} for a rainy afternoon",
            "Throw on some {genre} while I cook",
        ],
    ),
];

/// The 47 built-in formulations, ids `<family>-<nn>`.
pub fn default_formulations() -> Vec<FormulationTemplate> {
    FAMILIES
        .iter()
        .flat_map(|(family, templates)| {
            templates
                .iter()
                .enumerate()
                .map(move |(i, t)| FormulationTemplate::new(format!("{family}-{:02}", i + 1), *t))
        })
        .collect()
}

/// 50 genres in ten families of five related styles.
#[rustfmt::skip]
pub const DEFAULT_GENRES: [&str; 50] = [
    "jazz", "blues", "soul", "funk", "r&b",
    "classical", "opera", "ambient", "new age", "soundtrack",
    "rock", "indie rock", "punk", "grunge", "alternative",
    "metal", "heavy metal", "death metal", "hardcore", "industrial",
    "pop", "k-pop", "dance pop", "synthpop", "disco",
    "techno", "trance", "house", "dubstep", "drum and bass",
    "hip hop", "rap", "trap", "grime", "reggaeton",
    "latin", "salsa", "samba", "bossa nova", "merengue",
    "country", "folk", "bluegrass", "americana", "singer-songwriter",
    "reggae", "ska", "dancehall", "afrobeat", "gospel",
];

pub fn default_genres() -> Vec<String> {
    DEFAULT_GENRES.iter().map(|g| g.to_string()).collect()
}

fn py_str(s: &str) -> String {
    format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
}

/// Renders fitted ranges as `{'name': ..., 'ranges': ['lo-hi', ...]}` entries.
pub fn feature_ranges(ontology: &Ontology) -> String {
    let dims: Vec<String> = ontology
        .dimensions()
        .iter()
        .map(|d| {
            let ranges: Vec<String> = d
                .edges
                .windows(2)
                .map(|w| py_str(&format!("{:.2}-{:.2}", w[0], w[1])))
                .collect();
            format!("{{'name': {}, 'ranges': [{}]}}", py_str(&d.name), ranges.join(", "))
        })
        .collect();
    format!("[{}]", dims.join(", "))
}

pub fn build_system_prompt(ontology: &Ontology) -> String {
    let names: Vec<String> = ontology.dimension_names().map(py_str).collect();
    format!(
        "Answer in a single JSON object with an entry called 'location', which is a list of variables \
         formatted as dimension names as keys and indices as values. These describe the location in the \
         {d}D vibe space, with the dimensions [{names}] taken by a vibe corresponding to the music you would \
         recommend based on the chat history. Return variables as indices corresponding to the bucket values \
         in this pattern (zero-indexed) ensuring that the values are within the range of the bins (0-{top}): {ranges}",
        d = ontology.dim_count(),
        names = names.join(", "),
        top = ontology.bins_per_dim() - 1,
        ranges = feature_ranges(ontology),
    )
}

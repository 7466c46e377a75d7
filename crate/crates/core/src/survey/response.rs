use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{InstrumentSpec, ItemKind, LikertScale};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RespondentKey {
    pub respondent_id: String,
    pub wave: String,
}

impl std::fmt::Display for RespondentKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}@{}", self.respondent_id, self.wave)
    }
}

/// Answers of one respondent in one wave. Missing answers are absent keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SurveyResponse {
    pub respondent_id: String,
    pub wave: String,
    pub answers: BTreeMap<String, f64>,
}

impl SurveyResponse {
    pub fn key(&self) -> RespondentKey {
        RespondentKey {
            respondent_id: self.respondent_id.clone(),
            wave: self.wave.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Json,
}

impl InputFormat {
    /// Guess from a file name; anything other than `.json` is read as CSV.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => InputFormat::Json,
            _ => InputFormat::Csv,
        }
    }
}

pub const CSV_HEADER: [&str; 4] = ["respondent_id", "wave", "item_id", "value"];

/// Reverse-code an ordinal answer: `min + max - value`.
pub fn reverse_code(value: i32, scale: LikertScale) -> Result<i32> {
    if value < scale.min || value > scale.max {
        return Err(Error::OutOfBounds {
            item: String::from("<reverse_code>"),
            value: value as f64,
            min: scale.min,
            max: scale.max,
        });
    }
    Ok(scale.min + scale.max - value)
}

pub fn parse_responses(bytes: &[u8], format: InputFormat, instrument: &InstrumentSpec) -> Result<Vec<SurveyResponse>> {
    match format {
        InputFormat::Csv => parse_csv(bytes, instrument),
        InputFormat::Json => parse_json(bytes, instrument),
    }
}

struct Collector<'a> {
    instrument: &'a InstrumentSpec,
    order: Vec<RespondentKey>,
    by_key: HashMap<RespondentKey, BTreeMap<String, f64>>,
    seen: HashSet<(RespondentKey, String)>,
}

impl<'a> Collector<'a> {
    fn new(instrument: &'a InstrumentSpec) -> Self {
        Self {
            instrument,
            order: Vec::new(),
            by_key: HashMap::new(),
            seen: HashSet::new(),
        }
    }

    fn push(&mut self, key: RespondentKey, item_id: &str, value: Option<f64>, line: usize) -> Result<()> {
        let item = self
            .instrument
            .item(item_id)
            .ok_or_else(|| Error::UnknownItem(item_id.to_string()))?;
        if !self.seen.insert((key.clone(), item_id.to_string())) {
            return Err(Error::DuplicateAnswer {
                respondent: key.respondent_id,
                wave: key.wave,
                item: item_id.to_string(),
            });
        }
        if !self.by_key.contains_key(&key) {
            self.order.push(key.clone());
        }
        let answers = self.by_key.entry(key).or_default();
        let Some(value) = value else {
            return Ok(());
        };
        if !value.is_finite() {
            return Err(Error::MalformedInput {
                line,
                message: format!("non-finite value for item {item_id}"),
            });
        }
        if item.kind == ItemKind::Likert {
            let scale = self.instrument.item_scale(item);
            if value.fract() != 0.0 {
                return Err(Error::MalformedInput {
                    line,
                    message: format!("item {item_id} expects an integer answer, got {value}"),
                });
            }
            if !scale.contains(value) {
                return Err(Error::OutOfBounds {
                    item: item_id.to_string(),
                    value,
                    min: scale.min,
                    max: scale.max,
                });
            }
        }
        answers.insert(item_id.to_string(), value);
        Ok(())
    }

    fn finish(mut self) -> Vec<SurveyResponse> {
        self.order
            .into_iter()
            .map(|key| {
                let answers = self.by_key.remove(&key).unwrap_or_default();
                SurveyResponse {
                    respondent_id: key.respondent_id,
                    wave: key.wave,
                    answers,
                }
            })
            .collect()
    }
}

fn is_missing(raw: &str) -> bool {
    let raw = raw.trim();
    raw.is_empty() || raw.eq_ignore_ascii_case("na")
}

fn parse_csv(bytes: &[u8], instrument: &InstrumentSpec) -> Result<Vec<SurveyResponse>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader.headers()?.clone();
    let names: Vec<&str> = header.iter().map(|h| h.trim_start_matches('\u{feff}')).collect();
    if names != CSV_HEADER {
        return Err(Error::MalformedInput {
            line: 1,
            message: format!("expected header {}, got {}", CSV_HEADER.join(","), names.join(",")),
        });
    }
    let mut collector = Collector::new(instrument);
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or_default();
        if record.len() != 4 {
            return Err(Error::MalformedInput {
                line,
                message: format!("expected 4 fields, got {}", record.len()),
            });
        }
        let (respondent, wave, item, raw) = (&record[0], &record[1], &record[2], &record[3]);
        if respondent.is_empty() || item.is_empty() {
            return Err(Error::MalformedInput {
                line,
                message: "respondent_id and item_id are required".into(),
            });
        }
        let value = if is_missing(raw) {
            None
        } else {
            Some(raw.parse::<f64>().map_err(|_| Error::MalformedInput {
                line,
                message: format!("value {raw:?} is not a number"),
            })?)
        };
        let key = RespondentKey {
            respondent_id: respondent.to_string(),
            wave: wave.to_string(),
        };
        collector.push(key, item, value, line)?;
    }
    Ok(collector.finish())
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct JsonResponse {
    respondent_id: String,
    #[serde(default)]
    wave: String,
    answers: BTreeMap<String, Option<f64>>,
}

fn parse_json(bytes: &[u8], instrument: &InstrumentSpec) -> Result<Vec<SurveyResponse>> {
    let rows: Vec<JsonResponse> = serde_json::from_slice(bytes)?;
    let mut collector = Collector::new(instrument);
    for (index, row) in rows.into_iter().enumerate() {
        let key = RespondentKey {
            respondent_id: row.respondent_id,
            wave: row.wave,
        };
        for (item, value) in row.answers {
            collector.push(key.clone(), &item, value, index + 1)?;
        }
    }
    Ok(collector.finish())
}

/// Long-format CSV for the given responses, rows in response then item order.
pub fn to_csv(responses: &[SurveyResponse]) -> String {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for r in responses {
        for (item, value) in &r.answers {
            out.push_str(&format!("{},{},{},{}\n", r.respondent_id, r.wave, item, value));
        }
    }
    out
}

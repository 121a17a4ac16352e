//! Model documents, run records and CSV ingestion.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use themis_core::model::{Observation, ParameterSeries, ValidationErrors};
use themis_core::{PipelineRun, RegionModel};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid JSON at {at}: {message}")]
    Json { path: PathBuf, at: String, message: String },
    #[error("{path}: unsupported format_version {found}, expected {expected}")]
    Version { path: PathBuf, found: u32, expected: u32 },
    #[error("{path}: model is invalid\n{errors}")]
    Invalid { path: PathBuf, errors: ValidationErrors },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Fs { path: path.to_path_buf(), source }
}

fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| IoError::Json {
        path: path.to_path_buf(),
        at: format!("{} (line {}, column {})", e.path(), e.inner().line(), e.inner().column()),
        message: e.inner().to_string(),
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

fn write_atomic(path: &Path, text: &str) -> Result<(), IoError> {
    let tmp = path.with_extension("tmp~");
    fs::write(&tmp, text).map_err(fs_err(path))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        fs_err(path)(e)
    })
}

/// Parses a model document without validating it.
pub fn parse_model(path: &Path, text: &str) -> Result<RegionModel, IoError> {
    #[derive(serde::Deserialize)]
    struct Probe {
        format_version: Option<u32>,
    }
    if let Ok(Probe { format_version: Some(v) }) = serde_json::from_str::<Probe>(text) {
        if v != themis_core::model::FORMAT_VERSION {
            return Err(IoError::Version { path: path.into(), found: v, expected: themis_core::model::FORMAT_VERSION });
        }
    }
    parse_json(path, text)
}

pub fn load_model(path: &Path) -> Result<RegionModel, IoError> {
    let text = fs::read_to_string(path).map_err(fs_err(path))?;
    let model = parse_model(path, &text)?;
    model.validate().map_err(|errors| IoError::Invalid { path: path.into(), errors })?;
    Ok(model)
}

pub fn save_model(path: &Path, model: &RegionModel) -> Result<(), IoError> {
    write_atomic(path, &to_pretty(model))
}

pub fn load_run(path: &Path) -> Result<PipelineRun, IoError> {
    let text = fs::read_to_string(path).map_err(fs_err(path))?;
    parse_json(path, &text)
}

pub fn save_run(path: &Path, run: &PipelineRun) -> Result<(), IoError> {
    write_atomic(path, &to_pretty(run))
}

#[derive(Debug, serde::Deserialize)]
struct CsvRow {
    parameter_id: String,
    domain: String,
    year: String,
    value: String,
}

pub const CSV_HEADER: [&str; 4] = ["parameter_id", "domain", "year", "value"];

/// Merges CSV observations into the model's series; CSV values replace
/// existing observations for the same (parameter, year).
pub fn ingest_csv(model: &RegionModel, path: &Path, input: impl Read) -> Result<RegionModel, IoError> {
    let bad = |message: String| IoError::Csv { path: path.into(), message };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = reader.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(bad(format!("header must be {}, found {}", CSV_HEADER.join(","), header.join(","))));
    }
    let mut seen = BTreeSet::new();
    let mut incoming: BTreeMap<String, BTreeMap<i32, f64>> = BTreeMap::new();
    for (i, rec) in reader.deserialize::<CsvRow>().enumerate() {
        let line = i + 2;
        let row = rec.map_err(|e| bad(format!("line {line}: {e}")))?;
        let def = model
            .parameter(&row.parameter_id)
            .ok_or_else(|| bad(format!("line {line}: unknown parameter '{}'", row.parameter_id)))?;
        if def.domain != row.domain {
            return Err(bad(format!(
                "line {line}: parameter '{}' belongs to domain '{}', not '{}'",
                row.parameter_id, def.domain, row.domain
            )));
        }
        let year: i32 = row.year.parse().map_err(|_| bad(format!("line {line}: year '{}' is not an integer", row.year)))?;
        let value: f64 = row.value.parse().map_err(|_| bad(format!("line {line}: value '{}' is not a number", row.value)))?;
        if !value.is_finite() {
            return Err(bad(format!("line {line}: value must be finite")));
        }
        if !seen.insert((row.parameter_id.clone(), year)) {
            return Err(bad(format!("line {line}: duplicate row for '{}' in {year}", row.parameter_id)));
        }
        incoming.entry(row.parameter_id).or_default().insert(year, value);
    }
    let mut out = model.clone();
    for (id, rows) in incoming {
        let idx = match out.series.iter().position(|s| s.parameter_id == id) {
            Some(i) => i,
            None => {
                out.series.push(ParameterSeries { parameter_id: id.clone(), observations: Vec::new() });
                out.series.len() - 1
            }
        };
        let mut merged: BTreeMap<i32, f64> = out.series[idx].observations.iter().map(|o| (o.0, o.1)).collect();
        merged.extend(rows);
        out.series[idx].observations = merged.into_iter().map(|(y, v)| Observation(y, v)).collect();
    }
    // Series follow roster order.
    let order: BTreeMap<&str, usize> = model.parameters.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    out.series.sort_by_key(|s| order.get(s.parameter_id.as_str()).copied().unwrap_or(usize::MAX));
    out.validate().map_err(|errors| IoError::Invalid { path: path.into(), errors })?;
    Ok(out)
}

pub fn ingest_csv_file(model: &RegionModel, path: &Path) -> Result<RegionModel, IoError> {
    let file = fs::File::open(path).map_err(fs_err(path))?;
    ingest_csv(model, path, file)
}

/// One row per observation, in series order.
pub fn series_to_csv(model: &RegionModel) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for s in &model.series {
        let domain = model.parameter(&s.parameter_id).map(|p| p.domain.as_str()).unwrap_or("");
        for o in &s.observations {
            w.write_record([s.parameter_id.as_str(), domain, &o.0.to_string(), &o.1.to_string()]).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

//! Report documents, CSV flattening and structured errors.

use std::fmt::Display;

use formation::Error;
use serde::Serialize;
use serde_json::{json, Map, Value};

/// A failure that ends the run with a nonzero exit status.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    /// JSON path inside the offending file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalue: Option<f64>,
}

impl CliError {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
            file: None,
            path: None,
            residual: None,
            eigenvalue: None,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::new("usage", message)
    }

    pub fn io(file: impl Display, err: &std::io::Error) -> Self {
        CliError::new("io", err.to_string()).in_file(file)
    }

    pub fn in_file(mut self, file: impl Display) -> Self {
        self.file = Some(file.to_string());
        self
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self }).to_string()
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let message = err.to_string();
        match err {
            Error::Dimension(_) => CliError::new("dimension", message),
            Error::Validation { residual, .. } => CliError {
                residual: Some(residual),
                ..CliError::new("validation", message)
            },
            Error::NotPositive { eigenvalue } => CliError {
                eigenvalue: Some(eigenvalue),
                ..CliError::new("not-positive", message)
            },
            Error::Unsupported(_) => CliError::new("unsupported", message),
            Error::Schema { path, .. } => CliError {
                path: Some(path),
                ..CliError::new("schema", message)
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InputRecord {
    pub path: String,
    pub kind: &'static str,
    /// SHA-256 of the canonical encoding.
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfigEcho {
    pub restarts: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub ensemble_size: Option<usize>,
    pub seed: u64,
    pub seed_generated: bool,
    pub four_party: Option<Vec<usize>>,
    pub jobs: usize,
    pub format: &'static str,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ItemReport {
    /// Indices into the report's input list.
    pub inputs: Vec<usize>,
    pub non_converged: bool,
    pub wall_time_seconds: f64,
    pub result: Value,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub command: &'static str,
    pub config: ConfigEcho,
    pub inputs: Vec<InputRecord>,
    pub results: Vec<ItemReport>,
    pub non_converged: bool,
    pub wall_time_seconds: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// One record per result item, with nested result fields joined by dots.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut rows: Vec<Vec<(String, String)>> = Vec::new();
        for (i, item) in self.results.iter().enumerate() {
            let paths: Vec<&str> = item.inputs.iter().map(|&k| self.inputs[k].path.as_str()).collect();
            let mut row = vec![
                ("command".to_string(), self.command.to_string()),
                ("item".to_string(), i.to_string()),
                ("inputs".to_string(), paths.join(";")),
                ("seed".to_string(), self.config.seed.to_string()),
                ("nonConverged".to_string(), item.non_converged.to_string()),
                ("wallTimeSeconds".to_string(), item.wall_time_seconds.to_string()),
            ];
            flatten("", &item.result, &mut row);
            rows.push(row);
        }
        let mut header: Vec<String> = Vec::new();
        for row in &rows {
            for (k, _) in row {
                if !header.contains(k) {
                    header.push(k.clone());
                }
            }
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::usage(format!("csv export failed: {e}"));
        writer.write_record(&header).map_err(fail)?;
        for row in &rows {
            let record = header
                .iter()
                .map(|h| row.iter().find(|(k, _)| k == h).map(|(_, v)| v.as_str()).unwrap_or(""));
            writer.write_record(record).map_err(fail)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| CliError::usage(format!("csv export failed: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => flatten_map(prefix, map, out),
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn flatten_map(prefix: &str, map: &Map<String, Value>, out: &mut Vec<(String, String)>) {
    for (k, v) in map {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        flatten(&key, v, out);
    }
}

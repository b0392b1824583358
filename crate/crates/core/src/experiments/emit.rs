use std::path::Path;
use std::str::FromStr;

use super::ExperimentResult;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// Format implied by a file extension; CSV unless it is `.json`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Parse {
                what: "format",
                detail: format!("unknown output format `{other}`"),
            }),
        }
    }
}

/// CSV with two `#` comment lines (artifact version, config echo as JSON)
/// ahead of the header `trial,n,dist,seed,<columns>,elapsed_ms`. The echo
/// leaves out `threads`, which never changes the rows.
pub fn to_csv(result: &ExperimentResult) -> String {
    let echo = super::ExperimentConfig {
        threads: None,
        ..result.config.clone()
    };
    let mut out = format!(
        "# rmlab {}\n# config: {}\n",
        result.version,
        serde_json::to_string(&echo).expect("config serializes")
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["trial".to_owned(), "n".into(), "dist".into(), "seed".into()];
    header.extend(result.columns.iter().cloned());
    header.push("elapsed_ms".into());
    w.write_record(&header).expect("in-memory write");
    let dist = result.config.dist.to_string();
    for row in &result.rows {
        let mut record = vec![row.trial.to_string(), row.n.to_string(), dist.clone(), row.seed.to_string()];
        record.extend(row.values.iter().map(|c| c.to_string()));
        record.push(row.elapsed_ms.to_string());
        w.write_record(&record).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
    out
}

pub fn to_json(result: &ExperimentResult) -> String {
    let mut s = serde_json::to_string_pretty(result).expect("result serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<ExperimentResult> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        what: "result",
        detail: e.to_string(),
    })
}

pub fn emit(result: &ExperimentResult, format: OutputFormat, path: &Path) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => to_csv(result),
        OutputFormat::Json => to_json(result),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

//! Configured experiments: trials on a worker pool, merged in trial order,
//! rendered to CSV and JSON in memory and written only on success.

mod config;
mod kinds;

use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, ErrorKind, Result};

pub use config::{parse_config, ExperimentConfig, ExperimentKind};

/// One output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<Artifact>,
    pub summary: Value,
}

impl RunOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|a| a.name == name)
            .map(|a| a.contents.as_str())
    }

    /// CSV artifacts only, in emission order.
    pub fn csv_files(&self) -> impl Iterator<Item = &Artifact> {
        self.files.iter().filter(|a| a.name.ends_with(".csv"))
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for a in &self.files {
            std::fs::write(dir.join(&a.name), &a.contents)?;
        }
        Ok(())
    }
}

/// Runs `config` on a pool of `threads` workers (`0` picks the number of
/// cores). The outputs do not depend on `threads`.
pub fn run(config: &ExperimentConfig, threads: usize) -> Result<RunOutput> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let (mut files, summary) = pool.install(|| kinds::dispatch(config))?;
    let mut summary_text = serde_json::to_string_pretty(&summary)?;
    summary_text.push('\n');
    files.insert(
        0,
        Artifact {
            name: "resolved_config.json".into(),
            contents: config.to_json(),
        },
    );
    files.push(Artifact {
        name: "summary.json".into(),
        contents: summary_text,
    });
    Ok(RunOutput { files, summary })
}

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Config | ErrorKind::Io => 2,
        ErrorKind::Regime => 3,
        ErrorKind::Numerical => 4,
    }
}

/// Machine-readable description of a failed run.
pub fn error_report(err: &Error) -> Value {
    let status = match err.kind() {
        ErrorKind::Config => "config-error",
        ErrorKind::Io => "io-error",
        ErrorKind::Regime => "regime-error",
        ErrorKind::Numerical => "numerical-error",
    };
    json!({
        "status": status,
        "exit_code": exit_code(err.kind()),
        "message": err.to_string(),
    })
}

/// Header plus rows of already formatted fields.
#[derive(Debug, Clone)]
pub(crate) struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub(crate) fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub(crate) fn into_artifact(self, name: &str) -> Artifact {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        let bytes = w.into_inner().expect("in-memory flush");
        Artifact {
            name: name.to_string(),
            contents: String::from_utf8(bytes).expect("utf-8 fields"),
        }
    }
}

/// Shortest round-trip decimal form.
pub(crate) fn num(v: f64) -> String {
    format!("{v}")
}

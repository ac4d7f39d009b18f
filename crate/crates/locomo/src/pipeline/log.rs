//! JSON-lines run logs.
//!
//! Every line is one object carrying `record` (its kind), `stage` and
//! `iteration` (null outside training loops). The first line of a run is the
//! `config` record echoing the full effective configuration. Wall-clock
//! fields (`elapsed_s`) are written only outside deterministic mode.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::config::{RunConfig, RunStage};
use crate::error::{Error, Result};

pub struct RunLog {
    writer: BufWriter<File>,
    path: PathBuf,
    stage: RunStage,
    deterministic: bool,
    start: Instant,
}

impl RunLog {
    /// Starts a fresh log at `path` and writes the config record.
    pub fn create(path: &Path, stage: RunStage, config: &RunConfig) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = OpenOptions::new().create(true).write(true).truncate(true).open(path).map_err(|e| Error::io(path, e))?;
        let mut log = Self { writer: BufWriter::new(file), path: path.to_path_buf(), stage, deterministic: config.deterministic, start: Instant::now() };
        let cfg = serde_json::to_value(config).expect("config serializes");
        log.write("config", None, [("config".to_string(), cfg)].into_iter().collect())?;
        Ok(log)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one record; `fields` must be an object.
    pub fn record<S: Serialize>(&mut self, kind: &str, iteration: Option<usize>, fields: S) -> Result<()> {
        match serde_json::to_value(fields).expect("record serializes") {
            Value::Object(m) => self.write(kind, iteration, m),
            other => panic!("log record fields must be an object, got {other}"),
        }
    }

    fn write(&mut self, kind: &str, iteration: Option<usize>, fields: Map<String, Value>) -> Result<()> {
        let mut obj = Map::new();
        obj.insert("record".into(), json!(kind));
        obj.insert("stage".into(), json!(self.stage.label()));
        obj.insert("iteration".into(), json!(iteration));
        obj.extend(fields);
        if !self.deterministic {
            obj.insert("elapsed_s".into(), json!(self.start.elapsed().as_secs_f64()));
        }
        let line = serde_json::to_string(&Value::Object(obj)).expect("json");
        writeln!(self.writer, "{line}").map_err(|e| Error::io(&self.path, e))?;
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Parsed records of a log and the number of lines that were not JSON objects.
pub fn read_log(path: &Path) -> Result<(Vec<Value>, usize)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut skipped = 0;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Value>(&line) {
            Ok(v @ Value::Object(_)) => records.push(v),
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("{}: skipped {skipped} malformed line(s)", path.display());
    }
    Ok((records, skipped))
}

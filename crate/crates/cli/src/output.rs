//! Report envelopes, digests and TSV writing.
//!
//! Nothing here records wall-clock time, so reruns with the same inputs and
//! flags produce identical bytes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use ecapm_core::indicators::{AnnReport, ClassifierScores, ConfusionCounts};
use ecapm_core::synthetic::FitnessDistribution;
use ecapm_core::{CalibrationResult, Error};

use crate::Failure;

pub fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
    .into()
}

pub fn sha256_file(path: &Path) -> Result<String, Failure> {
    let bytes = fs::read(path).map_err(|e| io_failure(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn input_entry(path: &Path) -> Result<Value, Failure> {
    Ok(json!({ "path": path.display().to_string(), "sha256": sha256_file(path)? }))
}

/// Fields shared by every report: tool, command, full config, seed, inputs.
pub fn envelope<C: Serialize>(command: &str, config: &C, seed: Option<u64>, inputs: Value) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert(
        "tool".into(),
        json!({ "name": "ecapm", "version": env!("CARGO_PKG_VERSION") }),
    );
    m.insert("command".into(), json!(command));
    m.insert("config".into(), serde_json::to_value(config).unwrap_or(Value::Null));
    m.insert("seed".into(), json!(seed));
    m.insert("inputs".into(), inputs);
    m
}

pub fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::input(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

pub fn ser_fitness<S: Serializer>(d: &FitnessDistribution, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fitness_string(d))
}

pub fn fitness_string(d: &FitnessDistribution) -> String {
    match *d {
        FitnessDistribution::Pareto { exponent, minimum } => format!("pareto:{exponent}:{minimum}"),
        FitnessDistribution::LogNormal { location, scale } => format!("lognormal:{location}:{scale}"),
        FitnessDistribution::Uniform { lo, hi } => format!("uniform:{lo}:{hi}"),
    }
}

pub fn calibration_json(c: &CalibrationResult) -> Value {
    json!({
        "z": c.z,
        "residual": c.residual,
        "iterations": c.iterations,
        "method": c.method.as_str(),
    })
}

pub fn confusion_json(c: &ConfusionCounts) -> Value {
    json!({
        "tp": c.true_positive,
        "tn": c.true_negative,
        "fp": c.false_positive,
        "fn": c.false_negative,
    })
}

pub fn scores_json(s: &ClassifierScores) -> Value {
    json!({ "tpr": s.tpr, "spc": s.spc, "fpr": s.fpr, "ppv": s.ppv, "acc": s.acc })
}

pub fn ann_json(r: &AnnReport) -> Value {
    json!({
        "holder": {
            "degree": r.holder_degree,
            "strength": r.holder_strength,
            "neighbor_degree": r.holder_neighbor_degree,
            "neighbor_strength": r.holder_neighbor_strength,
        },
        "issuer": {
            "degree": r.issuer_degree,
            "strength": r.issuer_strength,
            "neighbor_degree": r.issuer_neighbor_degree,
            "neighbor_strength": r.issuer_neighbor_strength,
        },
    })
}

/// Buffered tab-separated writer.
pub struct Tsv {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Tsv {
    pub fn create(path: PathBuf, header: &[&str]) -> Result<Self, Failure> {
        let file = File::create(&path).map_err(|e| io_failure(&path, e))?;
        let mut t = Self {
            path,
            out: BufWriter::new(file),
        };
        t.row(header.iter().map(|s| s.to_string()))?;
        Ok(t)
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) -> Result<(), Failure> {
        let line = cells.into_iter().collect::<Vec<_>>().join("\t");
        writeln!(self.out, "{line}").map_err(|e| io_failure(&self.path, e))
    }

    pub fn finish(mut self) -> Result<PathBuf, Failure> {
        self.out.flush().map_err(|e| io_failure(&self.path, e))?;
        Ok(self.path)
    }
}

/// Cell text for a JSON value: numbers and strings verbatim, null as `NA`.
pub fn cell(v: &Value) -> String {
    match v {
        Value::Null => "NA".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn num(x: f64) -> String {
    cell(&json!(x))
}

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of the metrics log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub run_id: String,
    pub task: String,
    pub config_hash: String,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

pub const CSV_HEADER: &str = "run_id,task,config_hash,seed,metric,value";

/// Writes `metrics.jsonl` and its `metrics.csv` mirror into `dir`.
pub fn write_metrics(dir: &Path, records: &[MetricRecord]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let jsonl = dir.join("metrics.jsonl");
    let mut f = fs::File::create(&jsonl).map_err(|e| Error::io(&jsonl, e))?;
    for r in records {
        writeln!(f, "{}", serde_json::to_string(r)?).map_err(|e| Error::io(&jsonl, e))?;
    }
    let csv_path = dir.join("metrics.csv");
    let to_err = |e: csv::Error| Error::io(&csv_path, e.into());
    let mut w = csv::Writer::from_path(&csv_path).map_err(to_err)?;
    for r in records {
        w.serialize(r).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| Ok(serde_json::from_str(l)?)).collect()
}

/// Checks a parsed JSON line against the documented record schema.
pub fn validate_record(value: &serde_json::Value) -> std::result::Result<(), String> {
    let obj = value.as_object().ok_or("record is not an object")?;
    let expect = [
        ("run_id", "string"),
        ("task", "string"),
        ("config_hash", "string"),
        ("seed", "integer"),
        ("metric", "string"),
        ("value", "number"),
    ];
    if obj.len() != expect.len() {
        return Err(format!("expected {} fields, found {}", expect.len(), obj.len()));
    }
    for (key, kind) in expect {
        let v = obj.get(key).ok_or_else(|| format!("missing field {key}"))?;
        let ok = match kind {
            "string" => v.is_string(),
            "integer" => v.is_u64(),
            _ => v.is_number(),
        };
        if !ok {
            return Err(format!("field {key} is not a {kind}"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let recs = vec![MetricRecord {
            run_id: "r1".into(),
            task: "probe".into(),
            config_hash: "abc".into(),
            seed: 42,
            metric: "accuracy".into(),
            value: 0.75,
        }];
        write_metrics(dir.path(), &recs).unwrap();
        assert_eq!(read_metrics(&dir.path().join("metrics.jsonl")).unwrap(), recs);
        let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert_eq!(csv.lines().nth(1).unwrap(), "r1,probe,abc,42,accuracy,0.75");
        let line = fs::read_to_string(dir.path().join("metrics.jsonl")).unwrap();
        validate_record(&serde_json::from_str(line.trim()).unwrap()).unwrap();
    }

    #[test]
    fn schema_rejects_missing_fields() {
        let v: serde_json::Value = serde_json::json!({"run_id": "x", "task": "t"});
        assert!(validate_record(&v).is_err());
    }
}

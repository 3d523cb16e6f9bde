use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::path::Path;

use serde_json::{json, Value};

pub const HEADER: [&str; 6] = ["experiment", "params", "estimate", "stderr", "n_samples", "seed"];

#[derive(Debug, Clone)]
pub struct Record {
    pub experiment: String,
    pub params: BTreeMap<String, Value>,
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: Option<u64>,
    pub report: Value,
}

/// Shortest representation that parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    match serde_json::Number::from_f64(x) {
        Some(n) => n.to_string(),
        None => format!("{x}"),
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(format!("{x}")))
}

impl Record {
    pub fn to_json(&self) -> Value {
        json!({
            "experiment": self.experiment,
            "seed": self.seed,
            "params": self.params,
            "estimate": num(self.estimate),
            "stderr": num(self.stderr),
            "n_samples": self.n_samples,
            "report": self.report,
        })
    }

    fn fields(&self) -> [String; 6] {
        [
            self.experiment.clone(),
            serde_json::to_string(&self.params).unwrap(),
            fmt_f64(self.estimate),
            fmt_f64(self.stderr),
            self.n_samples.to_string(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
        ]
    }
}

/// Append a row, writing the header first when the file is new or empty.
pub fn append(path: &Path, rec: &Record) -> std::io::Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(HEADER)?;
    }
    w.write_record(rec.fields())?;
    w.flush()
}

pub fn read(path: &Path) -> Result<Vec<Record>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let header = r.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(format!("schema mismatch: expected columns {HEADER:?}, found {:?}", header.iter().collect::<Vec<_>>()));
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row.map_err(|e| format!("row {i}: {e}"))?;
        let bad = |what: &str| format!("row {i}: bad {what}");
        let params: BTreeMap<String, Value> = serde_json::from_str(&row[1]).map_err(|_| bad("params"))?;
        let seed = if row[5].is_empty() { None } else { Some(row[5].parse().map_err(|_| bad("seed"))?) };
        out.push(Record {
            experiment: row[0].to_string(),
            params,
            estimate: row[2].parse().map_err(|_| bad("estimate"))?,
            stderr: row[3].parse().map_err(|_| bad("stderr"))?,
            n_samples: row[4].parse().map_err(|_| bad("n_samples"))?,
            seed,
            report: Value::Null,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 2.0 * std::f64::consts::PI, 3.815e-88, 1e300, 0.0, -1.5e-7, f64::INFINITY] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let mut params = BTreeMap::new();
        params.insert("shape".to_string(), Value::from("circle"));
        params.insert("radius".to_string(), Value::from(0.7));
        let rec = Record {
            experiment: "crofton".into(),
            params,
            estimate: 4.398_229_715_025_71,
            stderr: 1.25e-3,
            n_samples: 1000,
            seed: Some(7),
            report: Value::Null,
        };
        append(&path, &rec).unwrap();
        append(&path, &Record { seed: None, ..rec.clone() }).unwrap();
        let rows = read(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].estimate.to_bits(), rec.estimate.to_bits());
        assert_eq!(rows[0].params, rec.params);
        assert_eq!(rows[0].seed, Some(7));
        assert_eq!(rows[1].seed, None);
    }
}

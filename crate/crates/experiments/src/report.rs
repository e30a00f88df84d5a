//! Machine-readable experiment reports and CSV series.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

/// One checked quantity. `pass` holds when `value <= tolerance`: values are
/// deviations, excesses or shortfalls, never raw observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Measurement {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Measurement {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }

    /// `|observed - expected| <= tolerance`.
    pub fn close(name: impl Into<String>, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self::at_most(name, (observed - expected).abs(), tolerance)
    }

    /// A yes/no check recorded as 0 (held) or 1 (failed) against tolerance 0.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_most(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }
}

/// Row of an optional CSV series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub experiment: String,
    pub label: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub id: String,
    pub paper_anchor: String,
    pub params: BTreeMap<String, Value>,
    pub measurements: Vec<Measurement>,
    pub runtime_seconds: f64,
    pub seed: u64,
    #[serde(skip)]
    pub series: Vec<SeriesRow>,
}

impl ExperimentReport {
    pub fn new(id: &str, anchor: &str, seed: u64) -> Self {
        ExperimentReport {
            id: id.into(),
            paper_anchor: anchor.into(),
            params: BTreeMap::new(),
            measurements: Vec::new(),
            runtime_seconds: 0.0,
            seed,
            series: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.params.insert(key.into(), v);
    }

    pub fn push(&mut self, m: Measurement) {
        self.measurements.push(m);
    }

    pub fn point(&mut self, label: impl Into<String>, x: f64, y: f64) {
        self.series.push(SeriesRow {
            experiment: self.id.clone(),
            label: label.into(),
            x,
            y,
        });
    }

    pub fn passed(&self) -> bool {
        !self.measurements.is_empty() && self.measurements.iter().all(|m| m.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Measurement> {
        self.measurements.iter().filter(|m| !m.pass)
    }

    /// The report without its timing, for reproducibility comparisons.
    pub fn measured_json(&self) -> Result<String> {
        let v = serde_json::json!({
            "id": self.id,
            "params": self.params,
            "measurements": self.measurements,
            "seed": self.seed,
        });
        Ok(serde_json::to_string(&v)?)
    }
}

pub fn write_json(path: &Path, reports: &[ExperimentReport]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    if let [one] = reports {
        serde_json::to_writer_pretty(&mut f, one)?;
    } else {
        serde_json::to_writer_pretty(&mut f, reports)?;
    }
    writeln!(f)?;
    Ok(())
}

pub fn write_csv(path: &Path, reports: &[ExperimentReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in reports {
        for row in &r.series {
            w.serialize(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

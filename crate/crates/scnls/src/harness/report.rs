//! Deterministic report emission: one CSV table per run, a JSON summary with
//! pass/fail per assertion, plot-ready (x, y) series, and golden field
//! snapshots. Identical config (hence hash) and seed produce byte-identical
//! CSV and field files.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::field_io::write_field;
use crate::grid::WaveField;
use crate::harness::config::{CanonicalEcho, ExperimentKind};

#[derive(Debug, Clone, Serialize)]
pub struct AssertionResult {
    pub name: String,
    pub pass: bool,
    pub measured: Vec<f64>,
    pub detail: String,
}

impl AssertionResult {
    pub fn new(name: &str, pass: bool, measured: Vec<f64>, detail: String) -> Self {
        AssertionResult {
            name: name.to_string(),
            pass,
            measured,
            detail,
        }
    }
}

/// Everything a single experiment run produced.
#[derive(Debug)]
pub struct RunRecord {
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub config_json: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub assertions: Vec<AssertionResult>,
    pub canonical: Option<CanonicalEcho>,
    pub notes: Vec<String>,
    pub tainted: bool,
    pub wall_ms: u128,
    pub fields: Vec<(String, WaveField)>,
    pub plots: Vec<(String, Vec<(f64, f64)>)>,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        !self.tainted && self.assertions.iter().all(|a| a.pass)
    }

    /// Full table as a string (header + one line per measurement row, every
    /// row prefixed with the config hash).
    pub fn csv(&self) -> String {
        let mut s = String::new();
        s.push_str("config_hash,");
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&self.config_hash[..16]);
            for v in row {
                s.push(',');
                s.push_str(&fmt_f64(*v));
            }
            s.push('\n');
        }
        s
    }
}

/// Shortest round-trip decimal form; stable across runs for equal bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment: &'static str,
    config_hash: &'a str,
    pass: bool,
    tainted: bool,
    assertions: &'a [AssertionResult],
    canonical_potential: &'a Option<CanonicalEcho>,
    notes: &'a [String],
    wall_ms: u128,
}

/// Write `table.csv`, `summary.json`, `plot_*.csv` and `fields/*.bin` under
/// `<out>/<experiment>/<hash16>/`. Returns the run directory.
pub fn emit_reports(record: &RunRecord, out_root: &Path) -> Result<PathBuf> {
    let dir = out_root
        .join(record.experiment.as_str())
        .join(&record.config_hash[..16]);
    std::fs::create_dir_all(dir.join("fields"))?;

    std::fs::write(dir.join("table.csv"), record.csv())?;
    std::fs::write(dir.join("config.json"), &record.config_json)?;

    let summary = Summary {
        experiment: record.experiment.as_str(),
        config_hash: &record.config_hash,
        pass: record.passed(),
        tainted: record.tainted,
        assertions: &record.assertions,
        canonical_potential: &record.canonical,
        notes: &record.notes,
        wall_ms: record.wall_ms,
    };
    let mut f = std::fs::File::create(dir.join("summary.json"))?;
    f.write_all(serde_json::to_string_pretty(&summary)?.as_bytes())?;
    f.write_all(b"\n")?;

    for (name, series) in &record.plots {
        let mut s = String::from("x,y\n");
        for (x, y) in series {
            s.push_str(&fmt_f64(*x));
            s.push(',');
            s.push_str(&fmt_f64(*y));
            s.push('\n');
        }
        std::fs::write(dir.join(format!("plot_{name}.csv")), s)?;
    }

    for (name, field) in &record.fields {
        write_field(&dir.join("fields").join(format!("{name}.bin")), field)?;
    }
    Ok(dir)
}

/// Print the human-facing result lines (one per assertion) and the table on
/// failure.
pub fn print_outcome(record: &RunRecord) {
    for a in &record.assertions {
        let tag = if a.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {}::{} {}",
            record.experiment.as_str(),
            a.name,
            a.detail
        );
    }
    if record.tainted {
        println!(
            "[FAIL] {}::boundary_mass run tainted: mass reached the boundary band",
            record.experiment.as_str()
        );
    }
    if !record.passed() {
        println!("--- full table ---");
        print!("{}", record.csv());
    }
}

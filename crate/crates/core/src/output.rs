//! Files written for a run and read back by `report`.
//!
//! Per seed: `per_slot_seed{seed}.csv`, `plans_seed{seed}.json`,
//! `ledger_seed{seed}.csv`, `topology_seed{seed}.csv`. Per output directory:
//! `summary.csv` and `summary.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::ScenarioRun;
use crate::metrics::{aggregate_report, SlotRecord, SummaryRow};

pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_JSON: &str = "summary.json";

pub fn per_slot_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("per_slot_seed{seed}.csv"))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_records(path: &Path, records: &[SlotRecord]) -> Result<()> {
    write_csv(path, records)
}

pub fn read_records(path: &Path) -> Result<Vec<SlotRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_summary(dir: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_csv(&dir.join(SUMMARY_CSV), rows)?;
    write_json(&dir.join(SUMMARY_JSON), rows)
}

/// Summary rendered as CSV text, as written to `summary.csv`.
pub fn summary_csv_string(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes the per-seed files of one run.
pub fn write_run(dir: &Path, run: &ScenarioRun) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let seed = run.seed;
    write_records(&per_slot_path(dir, seed), &run.records)?;
    write_json(&dir.join(format!("plans_seed{seed}.json")), &run.plans)?;
    write_csv(&dir.join(format!("ledger_seed{seed}.csv")), &run.ledgers)?;
    run.topology
        .dump(&dir.join(format!("topology_seed{seed}.csv")))
}

/// Writes every run plus the merged summary; returns the summary.
pub fn write_sweep(dir: &Path, runs: &[ScenarioRun]) -> Result<Vec<SummaryRow>> {
    for run in runs {
        write_run(dir, run)?;
    }
    let summary = crate::harness::merged_summary(runs);
    write_summary(dir, &summary)?;
    Ok(summary)
}

/// Per-slot files found in `dir`, ordered by seed.
pub fn per_slot_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut found: Vec<(u64, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(seed) = name
            .strip_prefix("per_slot_seed")
            .and_then(|rest| rest.strip_suffix(".csv"))
            .and_then(|s| s.parse::<u64>().ok())
        {
            found.push((seed, entry.path()));
        }
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

/// Re-aggregates the per-slot files of a results directory.
pub fn report(dir: &Path) -> Result<Vec<SummaryRow>> {
    let files = per_slot_files(dir)?;
    if files.is_empty() {
        return Err(Error::Config(format!(
            "no per_slot_seed*.csv files in {}",
            dir.display()
        )));
    }
    let mut records = Vec::new();
    for f in files {
        records.extend(read_records(&f)?);
    }
    Ok(aggregate_report(&records))
}

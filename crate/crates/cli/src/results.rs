//! Run records and their CSV forms.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use egp_core::engine::TraceRow;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One trained model's metrics. `n_units` is the ensemble size for eGP,
/// the number of dimensions for M3GP and 1 for GP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: String,
    pub dataset: String,
    pub run: usize,
    pub seed: u64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub total_nodes: usize,
    pub n_units: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRow {
    pub method: String,
    pub dataset: String,
    pub run: usize,
    pub seed: u64,
    pub phase: String,
    pub accuracy: f64,
    pub nodes: usize,
    pub units: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: String,
    pub dataset: String,
    pub run: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub dataset: String,
    pub path: String,
    pub error: String,
}

pub const PHASES: [&str; 2] = ["train", "test"];

impl RunResult {
    pub fn accuracy(&self, phase: &str) -> f64 {
        if phase == "train" {
            self.train_accuracy
        } else {
            self.test_accuracy
        }
    }

    pub fn long_rows(&self) -> [LongRow; 2] {
        PHASES.map(|phase| LongRow {
            method: self.method.clone(),
            dataset: self.dataset.clone(),
            run: self.run,
            seed: self.seed,
            phase: phase.to_owned(),
            accuracy: self.accuracy(phase),
            nodes: self.total_nodes,
            units: self.n_units,
        })
    }
}

pub fn write_csv<W: Write, S: Serialize>(writer: W, rows: &[S]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

/// Writes a CSV with its header even when `rows` is empty.
pub fn write_csv_file<S: Serialize>(path: &Path, header: &[&str], rows: &[S]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    if rows.is_empty() {
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        w.flush().map_err(|e| CliError::io(path, e))?;
        return Ok(());
    }
    write_csv(file, rows)
}

pub fn read_results<R: Read>(reader: R) -> Result<Vec<RunResult>, CliError> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r.deserialize().collect::<Result<Vec<RunResult>, _>>()?;
    for row in &rows {
        for acc in [row.train_accuracy, row.test_accuracy] {
            if !(0.0..=1.0).contains(&acc) {
                return Err(CliError::Data(format!("accuracy {acc} out of range")));
            }
        }
    }
    Ok(rows)
}

pub fn read_results_file(path: &Path) -> Result<Vec<RunResult>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_results(file)
}

pub const RESULT_COLUMNS: [&str; 8] = [
    "method",
    "dataset",
    "run",
    "seed",
    "train_accuracy",
    "test_accuracy",
    "total_nodes",
    "n_units",
];
pub const LONG_COLUMNS: [&str; 8] = ["method", "dataset", "run", "seed", "phase", "accuracy", "nodes", "units"];
pub const TRACE_COLUMNS: [&str; 4] = ["generation", "best_tree_rmse", "best_forest_acc", "best_forest_size"];

pub fn long_format(results: &[RunResult]) -> Vec<LongRow> {
    results.iter().flat_map(RunResult::long_rows).collect()
}

pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<(), CliError> {
    write_csv_file(path, &TRACE_COLUMNS, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<RunResult> {
        vec![
            RunResult {
                method: "eGPn".into(),
                dataset: "BCW".into(),
                run: 0,
                seed: 42,
                train_accuracy: 0.975,
                test_accuracy: 0.5,
                total_nodes: 17,
                n_units: 3,
            },
            RunResult {
                method: "GP".into(),
                dataset: "BCW".into(),
                run: 1,
                seed: 7,
                train_accuracy: 1.0,
                test_accuracy: 0.25,
                total_nodes: 9,
                n_units: 1,
            },
        ]
    }

    #[test]
    fn long_format_golden() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &long_format(&sample())).unwrap();
        let expected = "\
method,dataset,run,seed,phase,accuracy,nodes,units
eGPn,BCW,0,42,train,0.975,17,3
eGPn,BCW,0,42,test,0.5,17,3
GP,BCW,1,7,train,1.0,9,1
GP,BCW,1,7,test,0.25,9,1
";
        assert_eq!(String::from_utf8(buf).unwrap(), expected);
    }

    #[test]
    fn results_round_trip() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &sample()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&RESULT_COLUMNS.join(",")));
        assert_eq!(read_results(buf.as_slice()).unwrap(), sample());
    }

    #[test]
    fn rejects_out_of_range_accuracy() {
        let text = format!("{}\nGP,X,0,1,1.5,0.5,3,1\n", RESULT_COLUMNS.join(","));
        assert!(read_results(text.as_bytes()).is_err());
    }

    #[test]
    fn empty_file_keeps_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        write_csv_file::<ErrorRow>(&path, &["dataset", "path", "error"], &[]).unwrap();
        assert_eq!(std::fs::read_to_string(path).unwrap(), "dataset,path,error\n");
    }
}

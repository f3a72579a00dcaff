//! Seeded multi-run execution over (dataset, method, run) triples.

use std::fs;
use std::path::Path;
use std::time::Instant;

use egp_core::engine::{self, TraceRow};
use egp_core::{gp_train, m3gp_train, Dataset, ModelDump};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Method};
use crate::results::{self, ErrorRow, RunResult, TimingRow};
use crate::CliError;

/// Stable per-run seed. Each (method, dataset, run) hashes independently,
/// so adding a method or dataset leaves every other seed unchanged.
pub fn derive_seed(base_seed: u64, method: &str, dataset: &str, run: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update(method.as_bytes());
    h.update([0]);
    h.update(dataset.as_bytes());
    h.update([0]);
    h.update((run as u64).to_le_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub result: RunResult,
    pub wall_seconds: f64,
    pub trace: Vec<TraceRow>,
    pub dump: ModelDump,
}

/// Trains one model with the given seed and evaluates it on both halves
/// of its split.
pub fn run_one(
    cfg: &ExperimentConfig,
    method: Method,
    dataset: &str,
    ds: &Dataset<f64>,
    run: usize,
    seed: u64,
) -> Result<RunArtifacts, CliError> {
    let start = Instant::now();
    let (train_accuracy, test_accuracy, total_nodes, n_units, trace, dump) = match method {
        Method::Gp => {
            let m = gp_train(ds, &cfg.gp_config(seed))?;
            let test = m.accuracy_on(ds, &m.split.test)?;
            (m.train_accuracy, test, m.tree.len(), 1, m.trace.clone(), ModelDump::from(&m))
        }
        Method::M3gp => {
            let m = m3gp_train(ds, &cfg.m3gp_config(seed))?;
            let test = m.accuracy_on(ds, &m.split.test)?;
            (m.train_accuracy, test, m.total_nodes(), m.dims.len(), m.trace.clone(), ModelDump::from(&m))
        }
        Method::Egp(variant) => {
            let m = engine::train(ds, &cfg.engine_config(variant, seed))?;
            let test = m.accuracy_on(ds, &m.split.test)?;
            (m.train_accuracy, test, m.total_nodes(), m.members.len(), m.trace.clone(), ModelDump::from(&m))
        }
    };
    Ok(RunArtifacts {
        result: RunResult {
            method: method.name().to_owned(),
            dataset: dataset.to_owned(),
            run,
            seed,
            train_accuracy,
            test_accuracy,
            total_nodes,
            n_units,
        },
        wall_seconds: start.elapsed().as_secs_f64(),
        trace,
        dump,
    })
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    /// Ordered by dataset (config order), method (config order), run.
    pub runs: Vec<RunArtifacts>,
    pub errors: Vec<ErrorRow>,
}

impl ExperimentOutput {
    pub fn results(&self) -> Vec<RunResult> {
        self.runs.iter().map(|r| r.result.clone()).collect()
    }

    pub fn timings(&self) -> Vec<TimingRow> {
        self.runs
            .iter()
            .map(|r| TimingRow {
                method: r.result.method.clone(),
                dataset: r.result.dataset.clone(),
                run: r.result.run,
                wall_seconds: r.wall_seconds,
            })
            .collect()
    }

    /// Writes results, long-format, timing and error CSVs plus one trace
    /// and one model document per run.
    pub fn write(&self, out: &Path) -> Result<(), CliError> {
        for sub in ["traces", "models"] {
            fs::create_dir_all(out.join(sub)).map_err(|e| CliError::io(out.join(sub), e))?;
        }
        let results = self.results();
        results::write_csv_file(&out.join("results.csv"), &results::RESULT_COLUMNS, &results)?;
        results::write_csv_file(&out.join("long.csv"), &results::LONG_COLUMNS, &results::long_format(&results))?;
        results::write_csv_file(
            &out.join("timings.csv"),
            &["method", "dataset", "run", "wall_seconds"],
            &self.timings(),
        )?;
        results::write_csv_file(&out.join("errors.csv"), &["dataset", "path", "error"], &self.errors)?;
        for r in &self.runs {
            let stem = format!("{}_{}_{}", file_safe(&r.result.dataset), r.result.method, r.result.run);
            results::write_trace(&out.join("traces").join(format!("{stem}.csv")), &r.trace)?;
            let path = out.join("models").join(format!("{stem}.json"));
            fs::write(&path, r.dump.to_json()).map_err(|e| CliError::io(&path, e))?;
        }
        Ok(())
    }
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Loads every configured dataset and runs the experiment. A dataset that
/// fails to load is recorded in `errors` and skipped.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentOutput, CliError> {
    let mut loaded = Vec::new();
    let mut errors = Vec::new();
    for spec in &cfg.datasets {
        match Dataset::<f64>::load_csv(&spec.path, &spec.csv_options()) {
            Ok(ds) => loaded.push((spec.name.clone(), ds)),
            Err(e) => errors.push(ErrorRow {
                dataset: spec.name.clone(),
                path: spec.path.display().to_string(),
                error: e.to_string(),
            }),
        }
    }
    let mut out = run_loaded(cfg, &loaded, jobs)?;
    out.errors = errors;
    Ok(out)
}

/// Runs every (dataset, method, run) on a pool of `jobs` workers. Output
/// order and content do not depend on scheduling.
pub fn run_loaded(
    cfg: &ExperimentConfig,
    datasets: &[(String, Dataset<f64>)],
    jobs: usize,
) -> Result<ExperimentOutput, CliError> {
    cfg.validate()?;
    let tasks: Vec<(usize, Method, usize)> = (0..datasets.len())
        .flat_map(|d| cfg.methods.iter().flat_map(move |&m| (0..cfg.runs).map(move |r| (d, m, r))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let runs = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(d, method, run)| {
                let (name, ds) = &datasets[d];
                let seed = derive_seed(cfg.base_seed, method.name(), name, run);
                run_one(cfg, method, name, ds, run, seed)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(ExperimentOutput {
        runs,
        errors: Vec::new(),
    })
}

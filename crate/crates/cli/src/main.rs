use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use egp_core::{CsvOptions, Dataset, LabelColumn};
use egp_cli::config::{ExperimentConfig, Method};
use egp_cli::experiment::{derive_seed, run_experiment, run_one};
use egp_cli::results::{read_results_file, write_trace};
use egp_cli::summary::summarize_default;
use egp_cli::{selftest, CliError};

#[derive(Parser)]
#[command(name = "egp", version, about = "Ensemble genetic programming for binary classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Overrides {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Generations for every method.
    #[arg(long)]
    generations: Option<usize>,
}

impl Overrides {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(g) = self.generations {
            cfg.set_generations(g);
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write its JSON document and trace.
    Train {
        /// CSV file with one label column.
        #[arg(long)]
        data: PathBuf,
        /// Label column: name, zero-based index or `last`.
        #[arg(long, default_value = "last")]
        label: LabelColumn,
        /// The CSV has no header row.
        #[arg(long)]
        no_header: bool,
        #[arg(long, default_value = "eGP-N")]
        method: Method,
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory.
        #[arg(long, default_value = "model")]
        out: PathBuf,
    },
    /// Run every configured (dataset, method, run).
    Experiment {
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; overrides the config.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        runs: Option<usize>,
        /// Comma-separated method names.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
    },
    /// Summarize a results CSV.
    Summarize {
        results: PathBuf,
        /// Config supplying plot exclusions.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train {
            data,
            label,
            no_header,
            method,
            overrides,
            out,
        } => {
            let cfg = overrides.load()?;
            let options = CsvOptions {
                has_header: !no_header,
                label,
            };
            let ds = Dataset::<f64>::load_csv(&data, &options)?;
            let name = data.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned());
            let seed = derive_seed(cfg.base_seed, method.name(), &name, 0);
            let r = run_one(&cfg, method, &name, &ds, 0, seed)?;
            std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
            let model = out.join("model.json");
            std::fs::write(&model, r.dump.to_json()).map_err(|e| CliError::io(&model, e))?;
            write_trace(&out.join("trace.csv"), &r.trace)?;
            println!(
                "{} on {}: train {:.4}, test {:.4}, {} nodes, {} units",
                method, name, r.result.train_accuracy, r.result.test_accuracy, r.result.total_nodes, r.result.n_units
            );
        }
        Command::Experiment {
            overrides,
            out,
            jobs,
            runs,
            methods,
        } => {
            let mut cfg = overrides.load()?;
            if let Some(r) = runs {
                cfg.runs = r;
            }
            if let Some(m) = methods {
                cfg.methods = m;
            }
            let out = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let jobs = jobs
                .or(cfg.jobs)
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
            if cfg.datasets.is_empty() {
                return Err(CliError::Usage("no datasets configured".into()));
            }
            let output = run_experiment(&cfg, jobs)?;
            output.write(&out)?;
            for e in &output.errors {
                eprintln!("skipped {}: {}", e.dataset, e.error);
            }
            println!("{} runs written to {}", output.runs.len(), out.display());
            if output.runs.is_empty() {
                return Err(CliError::Data("no dataset could be loaded".into()));
            }
        }
        Command::Summarize { results, config, out } => {
            let excludes = match config {
                Some(path) => ExperimentConfig::load(&path)?.plot_exclude,
                None => Vec::new(),
            };
            let report = summarize_default(&read_results_file(&results)?, &excludes)?;
            report.write(&out)?;
            print!("{}\n{}", report.summary_text(), report.significance_text());
        }
        Command::Selftest => {
            let checks = selftest::run();
            for c in &checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                println!("{status} {}{}", c.name, if c.passed { String::new() } else { format!(": {}", c.detail) });
            }
            if checks.iter().any(|c| !c.passed) {
                return Err(CliError::Invariant("selftest failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

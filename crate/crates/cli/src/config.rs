//! Experiment configuration: a TOML file whose defaults match the
//! standard parameter settings, plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use egp_core::engine::{EngineConfig, Variant};
use egp_core::{CsvOptions, GpConfig, LabelColumn, M3gpConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A method the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Gp,
    M3gp,
    Egp(Variant),
}

impl Method {
    pub fn all() -> Vec<Method> {
        let mut v = vec![Method::Gp, Method::M3gp];
        v.extend(Variant::ALL.map(Method::Egp));
        v
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Gp => "GP",
            Method::M3gp => "M3GP",
            Method::Egp(v) => v.name(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Method::all()
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown method '{s}'")))
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_header() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
    #[serde(default)]
    pub label: LabelColumn,
    #[serde(default = "default_header")]
    pub header: bool,
}

impl DatasetSpec {
    pub fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            has_header: self.header,
            label: self.label.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpSection {
    pub population: usize,
    pub generations: usize,
    pub cx_prob: f64,
    pub tournament_k: usize,
    pub parsimony_prob: f64,
    pub max_depth: Option<usize>,
}

impl Default for GpSection {
    fn default() -> Self {
        let d = GpConfig::new(0);
        Self {
            population: d.population,
            generations: d.generations,
            cx_prob: d.cx_prob,
            tournament_k: d.tournament_k,
            parsimony_prob: d.parsimony_prob,
            max_depth: d.max_depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct M3gpSection {
    pub population: usize,
    pub generations: usize,
    pub cx_prob: f64,
    pub tournament_k: usize,
    pub parsimony_prob: f64,
    pub max_depth: Option<usize>,
}

impl Default for M3gpSection {
    fn default() -> Self {
        let d = M3gpConfig::new(0);
        Self {
            population: d.population,
            generations: d.generations,
            cx_prob: d.cx_prob,
            tournament_k: d.tournament_k,
            parsimony_prob: d.parsimony_prob,
            max_depth: d.max_depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EgpSection {
    pub generations: usize,
    /// Subpopulation size for the standard variants.
    pub subpop_size: usize,
    /// Subpopulation size for the `-N5`/`-W5` variants.
    pub subpop_size_large: usize,
    pub cx_prob: f64,
    pub tournament_k: usize,
    pub max_depth: Option<usize>,
}

impl Default for EgpSection {
    fn default() -> Self {
        let d = EngineConfig::new(Variant::EgpN, 0);
        Self {
            generations: d.generations,
            subpop_size: Variant::EgpN.default_subpop_size(),
            subpop_size_large: Variant::EgpN5.default_subpop_size(),
            cx_prob: d.cx_prob,
            tournament_k: d.tournament_k,
            max_depth: d.max_depth,
        }
    }
}

/// Accuracy values (in percent) hidden from boxplot data for one dataset and phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotExclude {
    pub dataset: String,
    pub phase: String,
    pub values: Vec<f64>,
}

impl PlotExclude {
    pub fn matches(&self, dataset: &str, phase: &str, accuracy: f64) -> bool {
        self.dataset == dataset
            && self.phase == phase
            && self.values.iter().any(|v| (accuracy * 100.0 - v).abs() < 0.005)
    }
}

fn default_runs() -> usize {
    30
}

fn default_methods() -> Vec<Method> {
    Method::all()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub datasets: Vec<DatasetSpec>,
    #[serde(default)]
    pub gp: GpSection,
    #[serde(default)]
    pub m3gp: M3gpSection,
    #[serde(default)]
    pub egp: EgpSection,
    #[serde(default)]
    pub plot_exclude: Vec<PlotExclude>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            runs: default_runs(),
            base_seed: 0,
            methods: default_methods(),
            out: None,
            jobs: None,
            datasets: Vec::new(),
            gp: GpSection::default(),
            m3gp: M3gpSection::default(),
            egp: EgpSection::default(),
            plot_exclude: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("bad config: {e}")))
    }

    /// Reads a config file; relative dataset paths are taken relative to it.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for d in &mut cfg.datasets {
            if d.path.is_relative() {
                d.path = base.join(&d.path);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.runs == 0 {
            return Err(CliError::Usage("runs must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(CliError::Usage("at least one method is required".into()));
        }
        Ok(())
    }

    /// Applies one generation count to every method.
    pub fn set_generations(&mut self, generations: usize) {
        self.gp.generations = generations;
        self.m3gp.generations = generations;
        self.egp.generations = generations;
    }

    pub fn gp_config(&self, seed: u64) -> GpConfig {
        GpConfig {
            population: self.gp.population,
            generations: self.gp.generations,
            cx_prob: self.gp.cx_prob,
            tournament_k: self.gp.tournament_k,
            parsimony_prob: self.gp.parsimony_prob,
            max_depth: self.gp.max_depth,
            ..GpConfig::new(seed)
        }
    }

    pub fn m3gp_config(&self, seed: u64) -> M3gpConfig {
        M3gpConfig {
            population: self.m3gp.population,
            generations: self.m3gp.generations,
            cx_prob: self.m3gp.cx_prob,
            tournament_k: self.m3gp.tournament_k,
            parsimony_prob: self.m3gp.parsimony_prob,
            max_depth: self.m3gp.max_depth,
            ..M3gpConfig::new(seed)
        }
    }

    pub fn engine_config(&self, variant: Variant, seed: u64) -> EngineConfig {
        let subpop_size = match variant {
            Variant::EgpN5 | Variant::EgpW5 => self.egp.subpop_size_large,
            _ => self.egp.subpop_size,
        };
        EngineConfig {
            generations: self.egp.generations,
            subpop_size,
            cx_prob: self.egp.cx_prob,
            tournament_k: self.egp.tournament_k,
            max_depth: self.egp.max_depth,
            ..EngineConfig::new(variant, seed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_parameter_table() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg.runs, 30);
        assert_eq!(cfg.methods.len(), 8);
        assert_eq!((cfg.gp.population, cfg.gp.generations, cfg.gp.cx_prob), (500, 100, 0.95));
        assert_eq!((cfg.m3gp.population, cfg.m3gp.cx_prob), (500, 0.5));
        assert_eq!((cfg.egp.subpop_size, cfg.egp.subpop_size_large, cfg.egp.cx_prob), (250, 500, 0.5));
        assert_eq!(cfg.engine_config(Variant::EgpW5, 0).subpop_size, 500);
        assert_eq!(cfg.engine_config(Variant::EgpLowerN, 0).subpop_size, 250);
        assert_eq!(cfg.gp_config(0).tournament_k, 5);
    }

    #[test]
    fn parses_sections() {
        let cfg = ExperimentConfig::from_toml(
            r#"
runs = 3
base_seed = 9
methods = ["GP", "eGPn"]

[[datasets]]
name = "BCW"
path = "bcw.csv"
label = "class"

[[datasets]]
name = "HEART"
path = "/data/heart.csv"
label = 13
header = false

[egp]
generations = 20
subpop_size = 100

[[plot_exclude]]
dataset = "BRAZIL"
phase = "train"
values = [90.97]
"#,
        )
        .unwrap();
        assert_eq!(cfg.methods, vec![Method::Gp, Method::Egp(Variant::EgpLowerN)]);
        assert_eq!(cfg.datasets[0].label, LabelColumn::Name("class".into()));
        assert_eq!(cfg.datasets[1].label, LabelColumn::Index(13));
        assert!(!cfg.datasets[1].header);
        assert_eq!(cfg.engine_config(Variant::EgpN, 1).generations, 20);
        assert_eq!(cfg.gp.generations, 100);
        assert!(cfg.plot_exclude[0].matches("BRAZIL", "train", 0.9097));
        assert!(!cfg.plot_exclude[0].matches("BRAZIL", "test", 0.9097));
        assert!(!cfg.plot_exclude[0].matches("BRAZIL", "train", 0.9197));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml("methods = [\"RF\"]").is_err());
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        let cfg = ExperimentConfig::from_toml("runs = 0").unwrap();
        assert!(cfg.validate().is_err());
        assert!("eGP-X".parse::<Method>().is_err());
        assert_eq!("M3GP".parse::<Method>().unwrap(), Method::M3gp);
    }
}

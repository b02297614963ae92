//! Reproduction experiments: config schema, reports and the registry.
//!
//! Every experiment is a pure function of its config. Reports carry the
//! config hash, the seed and the crate version, never wall-clock data.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub mod convergence;
pub mod counterexamples;
pub mod ou;
pub mod reconstruction;
pub mod tasks;

pub use convergence::{repro_example_convergence, ConvergenceConfig, Coupling};
pub use counterexamples::{
    repro_counterexample_beta0, repro_counterexample_betapos, Beta0Config, BetaPosConfig,
};
pub use ou::{repro_ou_boundary, OuBoundaryConfig};
pub use reconstruction::{reconstruct_from_window, reconstruction_demo, ReconstructionConfig};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(criterion: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            criterion: criterion.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Numeric table exported as CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub verdicts: Vec<Verdict>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub tables: BTreeMap<String, Table>,
    pub provenance: RunProvenance,
}

impl ExperimentReport {
    pub fn new(experiment: &str, provenance: RunProvenance) -> Self {
        Self {
            experiment: experiment.into(),
            verdicts: Vec::new(),
            metrics: BTreeMap::new(),
            notes: Vec::new(),
            tables: BTreeMap::new(),
            provenance,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, criterion: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.criterion == criterion)
    }

    /// Records a finite metric; non-finite values become a note since JSON
    /// cannot carry them.
    pub fn metric(&mut self, key: &str, value: f64) {
        if value.is_finite() {
            self.metrics.insert(key.into(), value);
        } else {
            self.notes.push(format!("{key} = {value}"));
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `report.json` and one CSV per table into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        for (name, table) in &self.tables {
            table.write_csv(std::fs::File::create(dir.join(format!("{name}.csv")))?)?;
        }
        Ok(())
    }
}

/// First 16 hex digits of the SHA-256 of the canonical JSON form.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(hex::encode(&Sha256::digest(&bytes)[..8]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ExperimentSpec {
    OuBoundary(OuBoundaryConfig),
    ExampleConvergence(ConvergenceConfig),
    CounterexampleBeta0(Beta0Config),
    CounterexampleBetapos(BetaPosConfig),
    Reconstruction(ReconstructionConfig),
}

pub const REGISTERED_EXPERIMENTS: [&str; 5] = [
    "ou_boundary",
    "example_convergence",
    "counterexample_beta0",
    "counterexample_betapos",
    "reconstruction",
];

impl ExperimentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentSpec::OuBoundary(_) => "ou_boundary",
            ExperimentSpec::ExampleConvergence(_) => "example_convergence",
            ExperimentSpec::CounterexampleBeta0(_) => "counterexample_beta0",
            ExperimentSpec::CounterexampleBetapos(_) => "counterexample_betapos",
            ExperimentSpec::Reconstruction(_) => "reconstruction",
        }
    }

    /// Default settings of a registered experiment.
    pub fn default_for(name: &str) -> Result<Self> {
        let name = name.replace('-', "_");
        Ok(match name.as_str() {
            "ou_boundary" => ExperimentSpec::OuBoundary(OuBoundaryConfig::default()),
            "example_convergence" => {
                ExperimentSpec::ExampleConvergence(ConvergenceConfig::default())
            }
            "counterexample_beta0" => ExperimentSpec::CounterexampleBeta0(Beta0Config::default()),
            "counterexample_betapos" => {
                ExperimentSpec::CounterexampleBetapos(BetaPosConfig::default())
            }
            "reconstruction" => ExperimentSpec::Reconstruction(ReconstructionConfig::default()),
            other => {
                return Err(Error::Config(format!(
                    "unknown experiment `{other}`; registered: {}",
                    REGISTERED_EXPERIMENTS.join(", ")
                )));
            }
        })
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// Top-level experiment file:
///
/// ```toml
/// seed = 7
/// out_dir = "runs"
/// [experiment]
/// name = "ou_boundary"
/// lambdas = [0.0, 1.0, 2.5]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    pub experiment: ExperimentSpec,
}

impl ExperimentConfig {
    pub fn new(seed: u64, experiment: ExperimentSpec) -> Self {
        Self {
            seed,
            out_dir: default_out_dir(),
            experiment,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Hash of everything except the output directory.
    pub fn hash(&self) -> Result<String> {
        config_hash(&(self.seed, &self.experiment))
    }

    pub fn provenance(&self) -> Result<RunProvenance> {
        Ok(RunProvenance {
            config_hash: self.hash()?,
            seed: self.seed,
            code_version: CODE_VERSION.into(),
        })
    }

    pub fn run_dir(&self) -> Result<PathBuf> {
        Ok(self
            .out_dir
            .join(format!("{}-{}", self.experiment.name(), self.hash()?)))
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let prov = cfg.provenance()?;
    match &cfg.experiment {
        ExperimentSpec::OuBoundary(c) => repro_ou_boundary(c, cfg.seed, prov),
        ExperimentSpec::ExampleConvergence(c) => repro_example_convergence(c, cfg.seed, prov),
        ExperimentSpec::CounterexampleBeta0(c) => repro_counterexample_beta0(c, cfg.seed, prov),
        ExperimentSpec::CounterexampleBetapos(c) => repro_counterexample_betapos(c, cfg.seed, prov),
        ExperimentSpec::Reconstruction(c) => reconstruction_demo(c, cfg.seed, prov),
    }
}

/// Runs and writes the report under [`ExperimentConfig::run_dir`].
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<(ExperimentReport, PathBuf)> {
    let report = run_experiment(cfg)?;
    let dir = cfg.run_dir()?;
    report.write(&dir)?;
    Ok((report, dir))
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "`{name}` must be positive and finite, got {v}"
        )))
    }
}

/// Binomial standard error of a frequency.
pub(crate) fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

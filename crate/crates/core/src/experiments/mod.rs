//! Deterministic experiment sweeps: declarative configs, per-task records,
//! CSV/JSON persistence, and SVG plots. Everything is a pure function of
//! the `SweepConfig`, including its seeds — identical configs produce
//! byte-identical CSV files.

pub mod csv;
pub mod fit;
pub mod svg;
pub mod sweeps;
pub mod verify;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::DEFAULT_DENSE_LIMIT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    Verify,
    Thm1,
    Train,
    Cov,
    AllBits,
    Spectral,
}

impl ExperimentId {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentId::Verify => "verify",
            ExperimentId::Thm1 => "thm1",
            ExperimentId::Train => "train",
            ExperimentId::Cov => "cov",
            ExperimentId::AllBits => "all-bits",
            ExperimentId::Spectral => "spectral",
        }
    }
}

/// Declarative sweep description shared by every subcommand. Fields that a
/// given experiment ignores are simply unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub experiment: ExperimentId,
    pub pmin: u64,
    pub pmax: u64,
    pub bitlengths: Vec<u32>,
    pub seeds: Vec<u64>,
    /// Hidden layer widths of the network.
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch: usize,
    /// Dataset size m for the training experiments.
    pub samples: usize,
    pub lr: f64,
    pub out_dir: PathBuf,
    pub dense_limit: u64,
}

/// Partial override loaded from a JSON file; present fields win over the
/// flag-derived config.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfigPatch {
    pub pmin: Option<u64>,
    pub pmax: Option<u64>,
    pub bitlengths: Option<Vec<u32>>,
    pub seeds: Option<Vec<u64>>,
    pub hidden: Option<Vec<usize>>,
    pub epochs: Option<usize>,
    pub batch: Option<usize>,
    pub samples: Option<usize>,
    pub lr: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub dense_limit: Option<u64>,
}

impl SweepConfig {
    /// Paper-derived defaults per experiment, desk-rescaled where the
    /// full-size run is out of reach of a workstation.
    pub fn default_for(experiment: ExperimentId) -> Self {
        let base = SweepConfig {
            experiment,
            pmin: 3,
            pmax: 503,
            bitlengths: vec![8, 16, 24],
            seeds: (0..20).collect(),
            hidden: vec![100, 100],
            epochs: 2000,
            batch: 100,
            samples: 5000,
            lr: 0.001,
            out_dir: PathBuf::from("results"),
            dense_limit: DEFAULT_DENSE_LIMIT,
        };
        match experiment {
            ExperimentId::Verify => base,
            ExperimentId::Thm1 => SweepConfig {
                pmin: 300,
                pmax: 1500,
                ..base
            },
            ExperimentId::Train => SweepConfig {
                seeds: vec![0, 1],
                ..base
            },
            ExperimentId::Cov => SweepConfig {
                pmin: 3,
                pmax: 500,
                ..base
            },
            ExperimentId::AllBits => SweepConfig {
                bitlengths: vec![8, 20],
                seeds: vec![0],
                ..base
            },
            ExperimentId::Spectral => SweepConfig {
                pmin: 3,
                pmax: 2000,
                ..base
            },
        }
    }

    pub fn apply_patch(&mut self, patch: SweepConfigPatch) {
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = patch.$field {
                    self.$field = v;
                }
            };
        }
        take!(pmin);
        take!(pmax);
        take!(bitlengths);
        take!(seeds);
        take!(hidden);
        take!(epochs);
        take!(batch);
        take!(samples);
        take!(lr);
        take!(out_dir);
        take!(dense_limit);
    }

    pub fn validate(&self) -> Result<()> {
        if self.pmin < 3 {
            return Err(Error::Config("pmin must be at least 3".into()));
        }
        if self.pmax < self.pmin {
            return Err(Error::Config(format!(
                "empty prime range [{}, {}]",
                self.pmin, self.pmax
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("need at least one seed".into()));
        }
        if self.bitlengths.is_empty() {
            return Err(Error::Config("need at least one bitlength".into()));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be nonempty and positive".into()));
        }
        if self.lr <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }

    pub fn ensure_out_dir(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir)?;
        Ok(())
    }
}

/// One sweep task's worth of named statistics. Wall time goes to the JSON
/// sidecar only, so CSV bytes stay deterministic.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub experiment: ExperimentId,
    pub p: u64,
    pub bits: u32,
    pub seed: u64,
    pub stats: Vec<(String, f64)>,
    pub wall_time_s: f64,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a SweepConfig,
    environment: Environment,
    records: &'a [ExperimentRecord],
}

#[derive(Serialize)]
struct Environment {
    os: &'static str,
    arch: &'static str,
    cpus: usize,
}

/// Writes the config-echo + environment-fingerprint sidecar next to the
/// CSV results.
pub fn write_sidecar(cfg: &SweepConfig, records: &[ExperimentRecord]) -> Result<PathBuf> {
    let path = cfg.out_dir.join(format!("{}_run.json", cfg.experiment.name()));
    let sidecar = Sidecar {
        config: cfg,
        environment: Environment {
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
        records,
    };
    let body = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::Config(format!("sidecar serialization failed: {e}")))?;
    std::fs::write(&path, body)?;
    Ok(path)
}

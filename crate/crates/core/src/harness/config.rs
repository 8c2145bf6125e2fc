//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::spec::EstimatorSpec;
use crate::bandwidths::PluginOptions;
use crate::dgp::Model;
use crate::error::{LrvError, Result};
use crate::local_cov::BlockNormalization;

/// Options shared by every replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    pub plugin: PluginOptions,
    pub normalization: BlockNormalization,
    /// Multiply LRV estimates by `T / (T - p)`.
    pub dof_adjust: bool,
    /// Demean surprise losses before estimating their LRV.
    pub center_surprise_losses: bool,
    /// In-sample fraction of the forecast-breakdown design.
    pub gr_in_sample: f64,
    /// Scale the surprise-loss LRV by `1 + Tn/Tm` (fixed-scheme variance).
    pub gr_fixed_scheme_adjust: bool,
    pub fixed_b_paths: usize,
    pub fixed_b_grid: usize,
    pub fixed_b_seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        let fb = crate::har_tests::FixedBSettings::default();
        Self {
            plugin: PluginOptions::default(),
            normalization: BlockNormalization::Display,
            dof_adjust: true,
            center_surprise_losses: true,
            gr_in_sample: 0.4,
            gr_fixed_scheme_adjust: true,
            fixed_b_paths: fb.n_paths,
            fixed_b_grid: fb.grid_n,
            fixed_b_seed: fb.seed,
        }
    }
}

/// A grid of (model x estimator x T x delta) cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub models: Vec<Model>,
    pub estimators: Vec<EstimatorSpec>,
    #[serde(rename = "sample_sizes")]
    pub ts: Vec<usize>,
    pub deltas: Vec<f64>,
    pub n_reps: usize,
    pub alpha: f64,
    pub base_seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub out_path: Option<PathBuf>,
    pub options: RunOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            models: vec![Model::M1],
            estimators: vec!["dk-hac".parse().expect("valid default")],
            ts: vec![200],
            deltas: vec![0.0],
            n_reps: 5000,
            alpha: 0.05,
            base_seed: 20_240_601,
            threads: 0,
            out_path: None,
            options: RunOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| LrvError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LrvError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LrvError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_reps < 100 {
            return Err(LrvError::Config(format!("n_reps must be >= 100, got {}", self.n_reps)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(LrvError::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.models.is_empty() || self.estimators.is_empty() || self.ts.is_empty() || self.deltas.is_empty() {
            return Err(LrvError::Config("models, estimators, sample_sizes and deltas must be non-empty".into()));
        }
        if self.deltas.iter().any(|d| !d.is_finite()) {
            return Err(LrvError::Config("deltas must be finite".into()));
        }
        if self.ts.iter().any(|t| *t < 20) {
            return Err(LrvError::Config("sample sizes must be >= 20".into()));
        }
        let f = self.options.gr_in_sample;
        if !(f > 0.0 && f < 1.0) {
            return Err(LrvError::Config(format!("gr_in_sample must lie in (0, 1), got {f}")));
        }
        Ok(())
    }
}

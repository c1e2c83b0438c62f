//! Experiment configuration: the JSON schema consumed by `synth` and
//! `sweep`, with validation and conversion into core model dimensions.

use anyhow::{bail, Context, Result};
use gcca_core::model::{ModelDims, SynthesisMode};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

/// Model dimensions as they appear in a config file. `feature_dims` may be
/// omitted, in which case it is derived from the mode (`R + L_n` for
/// full-rank, `ceil(K_factor · (R + L_n))` for low-rank).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigDims {
    pub n_entities: usize,
    pub common_dim: usize,
    pub individual_dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_dims: Option<Vec<usize>>,
}

/// Synthesis mode. Serializes as `"full_rank"` or
/// `{"low_rank": {"k_factor": 2.0}}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigMode {
    FullRank,
    LowRank { k_factor: f64 },
}

impl From<ConfigMode> for SynthesisMode {
    fn from(mode: ConfigMode) -> Self {
        match mode {
            ConfigMode::FullRank => SynthesisMode::FullRank,
            ConfigMode::LowRank { k_factor } => SynthesisMode::LowRank { k_factor },
        }
    }
}

/// Solvers a sweep can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Racing,
    Maxvar,
    Cca2,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Racing => "racing",
            Method::Maxvar => "maxvar",
            Method::Cca2 => "cca2",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rank at which views are whitened inside `maxvar` (and `cca2`): the model
/// signal rank `R + L_n`, or the full numeric rank of the view.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Whitening {
    #[default]
    Signal,
    Full,
}

/// A Monte-Carlo sweep description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dims: ConfigDims,
    pub mode: ConfigMode,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub view_subsets: Vec<usize>,
    pub base_seed: u64,
    /// Whitening rank for the baselines; defaults to the signal rank.
    #[serde(default)]
    pub maxvar_whitening: Whitening,
}

impl ExperimentConfig {
    /// Parses and validates a JSON config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        config
            .validate()
            .with_context(|| format!("validating {}", path.display()))?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dims.individual_dims.len();
        if self.trials < 1 {
            bail!("trials must be at least 1");
        }
        if self.methods.is_empty() {
            bail!("at least one method required");
        }
        if self.view_subsets.is_empty() {
            bail!("at least one view subset required");
        }
        if dedup_len(&self.methods) != self.methods.len() {
            bail!("duplicate entries in methods");
        }
        if dedup_len(&self.view_subsets) != self.view_subsets.len() {
            bail!("duplicate entries in view_subsets");
        }
        for &subset in &self.view_subsets {
            if subset < 2 || subset > n {
                bail!("view subset {subset} outside 2..={n}");
            }
        }
        if self.methods.contains(&Method::Cca2) && !self.view_subsets.contains(&2) {
            bail!("cca2 requires a view subset of exactly 2");
        }
        for &snr in &self.snr_grid_db {
            if !snr.is_finite() {
                bail!("snr_grid_db contains a non-finite value");
            }
        }
        if self.snr_grid_db.is_empty() {
            bail!("snr_grid_db must contain at least one level");
        }
        if let ConfigMode::LowRank { .. } = self.mode {
            if self.dims.feature_dims.is_some() {
                bail!("feature_dims cannot be set in low_rank mode (derived from k_factor)");
            }
        }
        self.resolve_dims()?;
        Ok(())
    }

    /// Resolves the config into concrete model dimensions plus the mode.
    pub fn resolve_dims(&self) -> Result<(ModelDims, SynthesisMode)> {
        let mode: SynthesisMode = self.mode.into();
        let dims = match &self.dims.feature_dims {
            Some(k) => ModelDims::new(
                self.dims.n_entities,
                self.dims.common_dim,
                self.dims.individual_dims.clone(),
                k.clone(),
            ),
            None => ModelDims::for_mode(
                self.dims.n_entities,
                self.dims.common_dim,
                self.dims.individual_dims.clone(),
                mode,
            ),
        }
        .context("invalid dims")?;
        for (n, (&k, &l)) in dims
            .feature_dims
            .iter()
            .zip(&dims.individual_dims)
            .enumerate()
        {
            if k < dims.common_dim + l {
                bail!(
                    "view {n}: feature dim {k} below signal rank {}",
                    dims.common_dim + l
                );
            }
        }
        Ok((dims, mode))
    }
}

fn dedup_len<T: Clone + Ord>(items: &[T]) -> usize {
    let mut sorted = items.to_vec();
    sorted.sort();
    sorted.dedup();
    sorted.len()
}

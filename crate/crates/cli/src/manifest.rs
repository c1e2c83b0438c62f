//! Dataset manifest: one JSON file per synthesized dataset recording the
//! dimensions, mode, seed, optional noise level, and the matrix files.

use crate::config::ConfigMode;
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestDims {
    pub n_entities: usize,
    pub common_dim: usize,
    pub individual_dims: Vec<usize>,
    pub feature_dims: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub dims: ManifestDims,
    pub mode: ConfigMode,
    pub base_seed: u64,
    /// Set only when noise was added to the views.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    pub views: Vec<String>,
    pub common_factor: String,
    pub individual_factors: Vec<String>,
    pub mixing_factors: Vec<String>,
}

impl Manifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).context("serializing manifest")?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

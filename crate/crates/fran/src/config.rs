//! Optional JSON run configuration. Command-line flags take precedence.

use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub kt: Option<usize>,
    pub kr: Option<usize>,
    pub files: Option<usize>,
    pub mu_t: Option<f64>,
    pub mu_r: Option<f64>,
    pub r: Option<f64>,
    pub bits: Option<usize>,
    pub seed: Option<u64>,
    pub step: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<FileConfig> {
        use anyhow::Context;
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set in `self` replace those of `base`.
    pub fn overlay(self, base: FileConfig) -> FileConfig {
        FileConfig {
            kt: self.kt.or(base.kt),
            kr: self.kr.or(base.kr),
            files: self.files.or(base.files),
            mu_t: self.mu_t.or(base.mu_t),
            mu_r: self.mu_r.or(base.mu_r),
            r: self.r.or(base.r),
            bits: self.bits.or(base.bits),
            seed: self.seed.or(base.seed),
            step: self.step.or(base.step),
        }
    }
}

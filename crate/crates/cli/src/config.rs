use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ocam::ingest::InputPaths;
use ocam::metrics::MetricsConfig;
use ocam::model::{ComponentSpec, Epoch};
use ocam::pipeline::{AnalysisConfig, Format};

fn default_alpha() -> f64 {
    0.05
}

fn default_min_n() -> usize {
    5
}

fn default_window() -> u32 {
    1
}

/// Run configuration file. Relative paths are resolved against the
/// directory containing the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub epoch: Epoch,
    pub components: Vec<ComponentSpec>,
    #[serde(default)]
    pub inputs: InputPaths,
    /// Normalised event store written by `ingest`, read by `analyze`.
    #[serde(default)]
    pub store_dir: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_min_n")]
    pub min_n: usize,
    #[serde(default)]
    pub merge_commits: bool,
    #[serde(default = "default_window")]
    pub window_weeks: u32,
    #[serde(default)]
    pub strict_measures: bool,
    #[serde(default)]
    pub force_segmentation: bool,
    #[serde(default)]
    pub no_segmentation: bool,
    /// Any rejected record fails `ingest` with exit code 2.
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        config.inputs = config.inputs.resolved(base);
        let join = |p: &Option<PathBuf>, default: &str| {
            let p = p.clone().unwrap_or_else(|| PathBuf::from(default));
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        config.store_dir = Some(join(&config.store_dir, "store"));
        config.output_dir = Some(join(&config.output_dir, "out"));
        for component in &mut config.components {
            if let Some(repo) = &component.repo_path {
                if repo.is_relative() {
                    component.repo_path = Some(base.join(repo));
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bail!("alpha must lie in (0, 1), got {}", self.alpha);
        }
        if self.min_n < 2 {
            bail!("min_n must be at least 2, got {}", self.min_n);
        }
        if self.window_weeks < 1 {
            bail!("window_weeks must be at least 1");
        }
        if self.force_segmentation && self.no_segmentation {
            bail!("force_segmentation and no_segmentation are mutually exclusive");
        }
        if self.components.is_empty() {
            bail!("no components configured");
        }
        let mut ids: Vec<&str> = self
            .components
            .iter()
            .map(|c| c.component_id.as_str())
            .collect();
        ids.sort_unstable();
        if let Some(dup) = ids.windows(2).find(|w| w[0] == w[1]) {
            bail!("component {} configured twice", dup[0]);
        }
        for component in &self.components {
            component
                .validate()
                .with_context(|| format!("component {}", component.component_id))?;
        }
        Ok(())
    }

    pub fn store_dir(&self) -> &Path {
        self.store_dir.as_deref().unwrap_or(Path::new("store"))
    }

    pub fn output_dir(&self) -> &Path {
        self.output_dir.as_deref().unwrap_or(Path::new("out"))
    }

    pub fn metrics(&self) -> MetricsConfig {
        MetricsConfig {
            epoch: self.epoch,
            include_merges: self.merge_commits,
            window_weeks: self.window_weeks,
            strict_measures: self.strict_measures,
        }
    }

    pub fn analysis(&self) -> AnalysisConfig {
        AnalysisConfig {
            epoch: self.epoch,
            alpha: self.alpha,
            min_n: self.min_n,
            force_segmentation: self.force_segmentation,
            no_segmentation: self.no_segmentation,
        }
    }
}

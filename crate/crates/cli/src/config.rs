//! Flat run configuration, loaded from TOML and overridden by flags.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use tokennet_core::backbone::DEFAULT_ALPHA;
use tokennet_core::centrality::PageRankParams;
use tokennet_core::community::{DEFAULT_RESOLUTION, DEFAULT_SEED};
use tokennet_core::ranking::DEFAULT_PERSISTENCE;
use tokennet_core::temporal::Resolution;

/// Bad flag or config value; exits with status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub transfers: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub ego_tags: Option<PathBuf>,
    pub allowlist: Option<PathBuf>,
    /// Inclusive lower bound on transfer timestamps.
    pub start: Option<String>,
    /// Exclusive upper bound on transfer timestamps.
    pub end: Option<String>,
    pub group_entities: bool,
    /// Entity-name prefix of the group tracked by SCC and temporal reports.
    pub group: Option<String>,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub alpha: f64,
    pub resolution: Resolution,
    /// Tokens for per-token balance series; empty means the group's top tokens.
    pub tokens: Vec<String>,
    pub louvain_resolution: f64,
    pub seed: u64,
    pub top_k: usize,
    pub rbo_persistence: f64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let pr = PageRankParams::default();
        RunConfig {
            transfers: None,
            labels: None,
            ego_tags: None,
            allowlist: None,
            start: None,
            end: None,
            group_entities: true,
            group: None,
            damping: pr.damping,
            tol: pr.tol,
            max_iter: pr.max_iter,
            alpha: DEFAULT_ALPHA,
            resolution: Resolution::Day,
            tokens: Vec::new(),
            louvain_resolution: DEFAULT_RESOLUTION,
            seed: DEFAULT_SEED,
            top_k: 10,
            rbo_persistence: DEFAULT_PERSISTENCE,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Parse a config file. Relative input paths inside it are taken relative
    /// to the file's directory; `out_dir` stays relative to the working directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for slot in [
            &mut cfg.transfers,
            &mut cfg.labels,
            &mut cfg.ego_tags,
            &mut cfg.allowlist,
        ] {
            if let Some(p) = slot.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn pagerank(&self) -> PageRankParams {
        PageRankParams {
            damping: self.damping,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pagerank().validate().map_err(|e| usage(e.to_string()))?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(usage(format!("alpha = {} must lie in (0, 1]", self.alpha)));
        }
        if !(self.louvain_resolution.is_finite() && self.louvain_resolution > 0.0) {
            return Err(usage(format!(
                "louvain_resolution = {} must be positive",
                self.louvain_resolution
            )));
        }
        if !(self.rbo_persistence > 0.0 && self.rbo_persistence < 1.0) {
            return Err(usage(format!("rbo_persistence = {} must lie in (0, 1)", self.rbo_persistence)));
        }
        if self.top_k == 0 {
            return Err(usage("top_k must be at least 1"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serializing run config")
    }
}

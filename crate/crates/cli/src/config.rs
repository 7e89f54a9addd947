//! Run configuration: TOML file merged with command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Tab-separated `src trg` article links.
    pub edges: Option<PathBuf>,
    /// Clickstream rows `referrer resource [type] count`.
    pub clickstream: Option<PathBuf>,
    /// Per-link feature rows (positions, optional similarities and network columns).
    pub features: Option<PathBuf>,
    /// `name text...` lines for text similarity.
    pub texts: Option<PathBuf>,
    /// `name category...` lines for topic similarity.
    pub categories: Option<PathBuf>,
    pub threshold: u64,
    pub fail_fast: bool,
    pub recompute_network_features: bool,
    pub alphas: Vec<f64>,
    /// Belief strengths; defaults to 1..5 times the mean out-degree.
    pub kappas: Option<Vec<f64>>,
    pub projection_dim: usize,
    pub projection_seed: u64,
    pub sample_size: usize,
    pub sample_seed: u64,
    /// Correlate PageRank with views only over articles that have views.
    pub viewed_only: bool,
    /// Fit the hurdle models on the sampled table instead of the full one.
    pub hurdle_on_sample: bool,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            edges: None,
            clickstream: None,
            features: None,
            texts: None,
            categories: None,
            threshold: linkpop::ingest::DEFAULT_THRESHOLD,
            fail_fast: false,
            recompute_network_features: false,
            alphas: linkpop::wpr::DEFAULT_ALPHAS.to_vec(),
            kappas: None,
            projection_dim: linkpop::semantics::DEFAULT_DIMENSION,
            projection_seed: 0,
            sample_size: 10_000,
            sample_seed: 0,
            viewed_only: false,
            hurdle_on_sample: false,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Loads a TOML file; relative input paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in cfg.input_paths_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        Ok(cfg)
    }

    fn input_paths_mut(&mut self) -> impl Iterator<Item = &mut PathBuf> {
        [
            &mut self.edges,
            &mut self.clickstream,
            &mut self.features,
            &mut self.texts,
            &mut self.categories,
        ]
        .into_iter()
        .flatten()
    }

    pub fn inputs(&self) -> Vec<(&'static str, &Path)> {
        [
            ("edges", &self.edges),
            ("clickstream", &self.clickstream),
            ("features", &self.features),
            ("texts", &self.texts),
            ("categories", &self.categories),
        ]
        .into_iter()
        .filter_map(|(k, p)| p.as_deref().map(|p| (k, p)))
        .collect()
    }

    /// Every problem with the configuration, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (key, path) in self.inputs() {
            if !path.exists() {
                out.push(format!("{key}: {} does not exist", path.display()));
            }
        }
        if self.threshold == 0 {
            out.push("threshold: must be at least 1".into());
        }
        if self.alphas.is_empty() {
            out.push("alphas: at least one damping factor is required".into());
        }
        for a in &self.alphas {
            if !(*a > 0.0 && *a < 1.0) {
                out.push(format!("alphas: {a} is outside (0, 1)"));
            }
        }
        if let Some(k) = &self.kappas {
            if k.is_empty() {
                out.push("kappas: grid is empty".into());
            }
            for v in k {
                if !(*v > 0.0 && v.is_finite()) {
                    out.push(format!("kappas: {v} is not positive"));
                }
            }
        }
        if self.projection_dim == 0 {
            out.push("projection_dim: must be positive".into());
        }
        if self.sample_size == 0 {
            out.push("sample_size: must be positive".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            return Ok(());
        }
        bail!("invalid configuration:\n  {}", problems.join("\n  "))
    }

    /// Fails naming the config key (and flag) that must be set.
    pub fn require<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        match path {
            Some(p) => Ok(p),
            None => bail!("no `{key}` input given: set it in the config file or pass --{key}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_every_problem() {
        let cfg = RunConfig {
            edges: Some("/definitely/missing".into()),
            threshold: 0,
            alphas: vec![1.2, 0.85],
            kappas: Some(vec![-1.0]),
            ..RunConfig::default()
        };
        let p = cfg.problems();
        assert_eq!(p.len(), 4, "{p:?}");
        assert!(cfg.validate().unwrap_err().to_string().contains("threshold"));
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let cfg: RunConfig = toml::from_str("threshold = 5\nalphas = [0.5]\n").unwrap();
        assert_eq!(cfg.threshold, 5);
        assert_eq!(cfg.sample_size, 10_000);
        assert!(toml::from_str::<RunConfig>("thresold = 5\n").is_err());
    }
}

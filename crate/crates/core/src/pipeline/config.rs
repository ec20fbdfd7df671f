use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::insight::DEFAULT_GAMMA;
use crate::maa::MaaConfig;
use crate::model::{parse_pathway_name, ModelError, Carrier, PathwayConfig, Transport};

/// One run: which pathways, how to explore them, where outputs go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Relative paths resolve against the config file's directory.
    pub output_dir: PathBuf,
    /// Pathway names such as `hydrogen-shipping`; empty means all eight.
    #[serde(default)]
    pub pathways: Vec<String>,
    #[serde(default = "default_resolution")]
    pub resolution_hours: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub annual_demand_mwh: Option<f64>,
    #[serde(default)]
    pub distance_km: Option<f64>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub maa: MaaConfig,
    #[serde(default)]
    pub sample: SampleConfig,
    #[serde(default)]
    pub cluster: ClusterConfig,
    #[serde(default)]
    pub tree: TreeConfig,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default)]
    pub service: ServiceConfig,
}

fn default_resolution() -> usize {
    24
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub catalog: Option<PathBuf>,
    pub pathways: Option<PathBuf>,
    pub weather: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub n: usize,
    /// Share of samples re-solved against the LP.
    pub verify_fraction: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            n: 1_000_000,
            verify_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub k: usize,
    pub gamma: f64,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Use the carrier as a categorical feature when several carriers are present.
    pub with_carrier: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k: 3,
            gamma: DEFAULT_GAMMA,
            restarts: 10,
            max_iterations: 300,
            with_carrier: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeLabels {
    Clusters,
    Carrier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: Option<usize>,
    pub labels: TreeLabels,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 3,
            min_leaf: None,
            labels: TreeLabels::Clusters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub bins: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { bins: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub port: u16,
    pub allow_origin: Option<String>,
    /// Worker threads for tree fits.
    pub tree_workers: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            port: 8080,
            allow_origin: None,
            tree_workers: 2,
        }
    }
}

fn config_err(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

fn model_err(e: ModelError) -> PipelineError {
    match e {
        ModelError::Config(m) | ModelError::Parameter(m) | ModelError::Parse(m) => config_err(m),
        other => config_err(other.to_string()),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates a config file, resolving relative paths.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text).map_err(|e| match e {
            PipelineError::Config(m) => config_err(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.output_dir);
        for p in [&mut config.data.catalog, &mut config.data.pathways, &mut config.data.weather]
            .into_iter()
            .flatten()
        {
            resolve(p);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        for p in self.pathway_names() {
            parse_pathway_name(&p).map_err(model_err)?;
        }
        let mut names = self.pathway_names();
        names.sort();
        names.dedup();
        if names.len() != self.pathway_names().len() {
            return Err(config_err("pathways are listed more than once"));
        }
        for p in self.pathway_configs()? {
            p.validate().map_err(model_err)?;
        }
        self.maa.validate().map_err(|e| config_err(e.to_string()))?;
        for v in &self.maa.mga_variables {
            if !crate::model::MGA_TAGS.contains(&v.as_str()) {
                return Err(config_err(format!(
                    "unknown MGA variable `{v}`; valid: {}",
                    crate::model::MGA_TAGS.join(", ")
                )));
            }
        }
        if self.sample.n == 0 {
            return Err(config_err("sample.n must be positive"));
        }
        if !(self.sample.verify_fraction > 0.0 && self.sample.verify_fraction <= 1.0) {
            return Err(config_err("sample.verify_fraction must be in (0, 1]"));
        }
        if self.cluster.k == 0 || self.cluster.restarts == 0 || self.cluster.max_iterations == 0 {
            return Err(config_err("cluster.k, restarts and max_iterations must be positive"));
        }
        if !(self.cluster.gamma > 0.0 && self.cluster.gamma.is_finite()) {
            return Err(config_err("cluster.gamma must be positive"));
        }
        if self.tree.max_depth == 0 || self.tree.min_leaf == Some(0) {
            return Err(config_err("tree.max_depth and tree.min_leaf must be positive"));
        }
        if self.report.bins == 0 {
            return Err(config_err("report.bins must be positive"));
        }
        Ok(())
    }

    pub fn pathway_names(&self) -> Vec<String> {
        if self.pathways.is_empty() {
            Carrier::ALL
                .into_iter()
                .flat_map(|c| Transport::ALL.into_iter().map(move |t| crate::model::pathway_name(c, t)))
                .collect()
        } else {
            self.pathways.clone()
        }
    }

    pub fn pathway_configs(&self) -> Result<Vec<PathwayConfig>, PipelineError> {
        self.pathway_names()
            .iter()
            .map(|name| {
                let (c, t) = parse_pathway_name(name).map_err(model_err)?;
                let mut p = PathwayConfig::reference(c, t, self.resolution_hours);
                if let Some(d) = self.annual_demand_mwh {
                    p.annual_demand = d;
                }
                if let Some(d) = self.distance_km {
                    p.distance_km = d;
                }
                p.slack_epsilon = self.maa.epsilon;
                Ok(p)
            })
            .collect()
    }

    /// Keeps only `pathway`, which must be part of the run.
    pub fn restrict_to(&mut self, pathway: &str) -> Result<(), PipelineError> {
        parse_pathway_name(pathway).map_err(model_err)?;
        if !self.pathway_names().iter().any(|p| p == pathway) {
            return Err(config_err(format!(
                "pathway `{pathway}` is not in this config; configured: {}",
                self.pathway_names().join(", ")
            )));
        }
        self.pathways = vec![pathway.to_string()];
        Ok(())
    }
}

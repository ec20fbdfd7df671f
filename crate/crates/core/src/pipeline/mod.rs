//! Stage runner behind the CLI: optimize → maa → sample → cluster → tree,
//! plus the report bundle the explorer service loads.

mod config;
mod manifest;
mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{ClusterConfig, DataConfig, ReportConfig, RunConfig, SampleConfig, ServiceConfig, TreeConfig, TreeLabels};
pub use manifest::{sha256_hex, OutputRecord, RunManifest, StageRecord, MANIFEST_FILE};
pub use report::{CostStats, Histogram, PathwayReport, ReportBundle, VariableRange};

use crate::insight::{
    fit_cart, kmeans, kprototypes, reassign, ClusterExport, ClusterModel, ClusterOptions, Dataset, DecisionTree,
    InsightError, TreeOptions,
};
use crate::lp::{RowSense, SimplexSolver, SolverOptions, SparseLp};
use crate::maa::{run_maa, MaaError, MaaResult};
use crate::model::{
    mga_unit, ModelError, ModelInputs, PathwayConfig, PathwayMetrics, PathwayModel, BUNDLED_CATALOG, BUNDLED_PATHWAYS,
    BUNDLED_WEATHER,
};
use crate::sampler::{attach_costs, read_samples, sample, verify_near_optimal, write_samples, SampleSet, SamplerError, VerificationReport, VerifyOptions};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("stage {stage} is not up to date ({reason}); {hint}")]
    Stale {
        stage: String,
        reason: String,
        hint: String,
    },
    #[error("pathway {pathway} is infeasible; most violated constraint belongs to `{stage}` ({detail})")]
    Infeasible {
        pathway: String,
        stage: String,
        detail: String,
    },
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Maa(#[from] MaaError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Insight(#[from] InsightError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Model(ModelError::Config(_) | ModelError::Parse(_) | ModelError::MissingTechnology(_)) => 2,
            _ => 1,
        }
    }
}

/// Cost optimum of one pathway as written by the optimize stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumRecord {
    pub pathway: String,
    pub f_star: f64,
    pub metrics: PathwayMetrics,
}

/// Seed for one pathway, independent of which other pathways run.
pub fn pathway_seed(seed: u64, pathway: &str) -> u64 {
    let h = Sha256::digest(format!("{seed}:{pathway}").as_bytes());
    u64::from_le_bytes(h[..8].try_into().expect("8 bytes"))
}

/// JSON-safe digest of a [`VerificationReport`]; infinite costs become null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub threshold: f64,
    pub checked: usize,
    pub verified: usize,
    pub violations: Vec<ViolationRecord>,
    pub indeterminate: Vec<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub row: usize,
    pub cost: Option<f64>,
}

impl VerifySummary {
    pub fn of(report: &VerificationReport) -> Self {
        Self {
            threshold: report.threshold,
            checked: report.checked.len(),
            verified: report.verified,
            violations: report
                .violations
                .iter()
                .map(|v| ViolationRecord {
                    row: v.row,
                    cost: v.cost.is_finite().then_some(v.cost),
                })
                .collect(),
            indeterminate: report.indeterminate.clone(),
        }
    }
}

fn write_bytes(dir: &Path, rel: &str, bytes: &[u8]) -> Result<OutputRecord, PipelineError> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    std::fs::write(&path, bytes).map_err(|e| PipelineError::io(&path, e))?;
    Ok(OutputRecord {
        path: rel.to_string(),
        sha256: sha256_hex(bytes),
    })
}

fn write_sample_file(dir: &Path, rel: &str, set: &SampleSet) -> Result<Vec<OutputRecord>, PipelineError> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    write_samples(&path, set)?;
    Ok(vec![record_file(dir, rel)?, record_file(dir, &format!("{rel}.json"))?])
}

fn write_json<T: Serialize>(dir: &Path, rel: &str, value: &T) -> Result<OutputRecord, PipelineError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(dir, rel, &bytes)
}

fn read_json<T: serde::de::DeserializeOwned>(dir: &Path, rel: &str) -> Result<T, PipelineError> {
    let path = dir.join(rel);
    let bytes = std::fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

fn record_file(dir: &Path, rel: &str) -> Result<OutputRecord, PipelineError> {
    let path = dir.join(rel);
    let bytes = std::fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
    Ok(OutputRecord {
        path: rel.to_string(),
        sha256: sha256_hex(&bytes),
    })
}

pub fn optimum_path(pathway: &str) -> String {
    format!("optimize/{pathway}.json")
}

pub fn hull_path(pathway: &str) -> String {
    format!("maa/{pathway}.hull.json")
}

pub fn samples_path(pathway: &str) -> String {
    format!("samples/{pathway}.samples")
}

pub fn verify_path(pathway: &str) -> String {
    format!("samples/{pathway}.verify.json")
}

pub fn report_path(pathway: &str) -> String {
    format!("report/{pathway}.json")
}

pub const LABELED_SAMPLES: &str = "cluster/labeled.samples";
pub const CLUSTERS_JSON: &str = "cluster/clusters.json";
pub const TREE_JSON: &str = "tree/tree.json";
pub const TREE_DOT: &str = "tree/tree.dot";
pub const REASSIGNED_JSON: &str = "tree/reassigned.json";
pub const BUNDLE_JSON: &str = "report/bundle.json";

/// Component owning the most violated row or bound at `x`, with a note.
pub fn diagnose_infeasible(lp: &SparseLp, x: &[f64]) -> (String, String) {
    let act = lp.activities(x);
    let mut worst: (f64, String) = (0.0, String::new());
    for (row, a) in lp.rows().iter().zip(&act) {
        let v = match row.sense {
            RowSense::Le => a - row.rhs,
            RowSense::Ge => row.rhs - a,
            RowSense::Eq => (a - row.rhs).abs(),
        };
        if v > worst.0 {
            worst = (v, row.label.clone());
        }
    }
    for (j, &xj) in x.iter().enumerate() {
        let v = (lp.lower()[j] - xj).max(xj - lp.upper()[j]);
        if v > worst.0 {
            worst = (v, lp.column_labels()[j].clone());
        }
    }
    if worst.1.is_empty() {
        return ("unknown".into(), "no violated constraint at the phase-one point".into());
    }
    (stage_of(&worst.1), format!("{} off by {:.3e}", worst.1, worst.0))
}

fn stage_of(label: &str) -> String {
    label.split(['.', '[']).next().unwrap_or(label).to_string()
}

/// Labels for a sample set: k-prototypes when several carriers are
/// present and the carrier is used, k-means otherwise.
pub fn cluster_samples(set: &SampleSet, config: &ClusterConfig, seed: u64) -> Result<(Dataset, ClusterModel), PipelineError> {
    let carriers = set.carrier_runs.iter().map(|r| r.0.as_str()).collect::<std::collections::BTreeSet<_>>();
    let categorical = config.with_carrier && carriers.len() > 1;
    let data = Dataset::from_samples(set, categorical)?;
    let options = ClusterOptions {
        k: config.k,
        seed,
        restarts: config.restarts,
        max_iterations: config.max_iterations,
    };
    let model = if categorical {
        kprototypes(&data, config.gamma, &options)?
    } else {
        kmeans(&data, &options)?
    };
    Ok((data, model))
}

/// Class labels and names for a tree over `set`.
pub fn tree_labels(
    set: &SampleSet,
    labels: TreeLabels,
    cluster: &ClusterConfig,
    seed: u64,
) -> Result<(Vec<usize>, Vec<String>), PipelineError> {
    match labels {
        TreeLabels::Carrier => {
            let tags = set
                .carrier_tags()
                .ok_or_else(|| PipelineError::Runtime("samples carry no carrier tags".into()))?;
            let mut levels = tags.clone();
            levels.sort();
            levels.dedup();
            let codes = tags.iter().map(|t| levels.binary_search(t).expect("level present")).collect();
            Ok((codes, levels))
        }
        TreeLabels::Clusters => {
            let labels = match &set.labels {
                Some(l) => l.clone(),
                None => cluster_samples(set, cluster, seed)?.1.labels,
            };
            let k = labels.iter().copied().max().map_or(0, |m| m + 1);
            Ok((labels, (0..k).map(|c| format!("cluster {c}")).collect()))
        }
    }
}

/// CART over the physical MGA capacities of `set`.
pub fn fit_tree(set: &SampleSet, labels: &[usize], class_names: Vec<String>, config: &TreeConfig) -> Result<DecisionTree, PipelineError> {
    let data = Dataset::physical_from_samples(set)?;
    let tree = fit_cart(
        &data,
        labels,
        &TreeOptions {
            max_depth: config.max_depth,
            min_leaf: config.min_leaf,
        },
    )?;
    Ok(tree.with_class_names(class_names))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reassignment {
    pub class_names: Vec<String>,
    pub before: Vec<usize>,
    pub after: Vec<usize>,
    pub changed: usize,
    pub tree_accuracy: f64,
}

/// Loaded config, inputs and their hashes.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: RunConfig,
    pub config_hash: String,
    pub inputs: ModelInputs,
    catalog_hash: String,
    pathways_hash: String,
    weather_hash: String,
}

fn input_hash(path: Option<&Path>, bundled: &str) -> Result<String, PipelineError> {
    match path {
        Some(p) => Ok(sha256_hex(&std::fs::read(p).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?)),
        None => Ok(sha256_hex(bundled.as_bytes())),
    }
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let d = &config.data;
        let inputs = ModelInputs::load(d.catalog.as_deref(), d.pathways.as_deref(), d.weather.as_deref()).map_err(|e| match e {
            ModelError::Io(m) | ModelError::Parse(m) | ModelError::Config(m) => PipelineError::Config(m),
            other => PipelineError::Config(other.to_string()),
        })?;
        for p in config.pathway_configs()? {
            inputs.defs.find(p.carrier, p.transport).map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        let config_hash = sha256_hex(toml::to_string(&config).map_err(|e| PipelineError::Config(e.to_string()))?.as_bytes());
        Ok(Self {
            catalog_hash: input_hash(d.catalog.as_deref(), BUNDLED_CATALOG)?,
            pathways_hash: input_hash(d.pathways.as_deref(), BUNDLED_PATHWAYS)?,
            weather_hash: input_hash(d.weather.as_deref(), BUNDLED_WEATHER)?,
            config,
            config_hash,
            inputs,
        })
    }

    /// Loads `path`, then applies the command-line overrides.
    pub fn from_path(path: &Path, pathway: Option<&str>, seed: Option<u64>) -> Result<Self, PipelineError> {
        let mut config = RunConfig::load(path)?;
        if let Some(p) = pathway {
            config.restrict_to(p)?;
        }
        if let Some(s) = seed {
            config.seed = s;
        }
        Self::new(config)
    }

    pub fn output_dir(&self) -> &Path {
        &self.config.output_dir
    }

    fn manifest(&self) -> Result<RunManifest, PipelineError> {
        RunManifest::load_or_new(
            self.output_dir(),
            RunManifest {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config_hash: self.config_hash.clone(),
                catalog_hash: self.catalog_hash.clone(),
                pathways_hash: self.pathways_hash.clone(),
                weather_hash: self.weather_hash.clone(),
                seed: self.config.seed,
                stages: BTreeMap::new(),
            },
        )
    }

    fn commit(&self, records: Vec<(String, StageRecord)>) -> Result<(), PipelineError> {
        let mut m = self.manifest()?;
        m.stages.extend(records);
        m.save(self.output_dir())
    }

    fn ensure_output_dir(&self) -> Result<(), PipelineError> {
        std::fs::create_dir_all(self.output_dir()).map_err(|e| PipelineError::io(self.output_dir(), e))
    }

    /// Hash of everything that determines `stage`'s outputs for `pathway`.
    pub fn fingerprint(&self, stage: &str, pathway: Option<&str>) -> String {
        let c = &self.config;
        let mut parts = vec![
            serde_json::json!({
                "catalog": self.catalog_hash,
                "pathways": self.pathways_hash,
                "weather": self.weather_hash,
                "resolution": c.resolution_hours,
                "demand": c.annual_demand_mwh,
                "distance": c.distance_km,
            }),
        ];
        let order = ["optimize", "maa", "sample", "cluster", "tree", "report"];
        let depth = order.iter().position(|s| *s == stage).expect("known stage");
        if depth >= 1 {
            parts.push(serde_json::to_value(&c.maa).expect("serializable"));
        }
        if depth >= 2 {
            parts.push(serde_json::json!({ "sample": c.sample, "seed": c.seed }));
        }
        if stage == "cluster" || stage == "tree" {
            parts.push(serde_json::json!({ "cluster": c.cluster, "pathways": c.pathway_names() }));
        }
        if stage == "tree" {
            parts.push(serde_json::to_value(&c.tree).expect("serializable"));
        }
        if stage == "report" {
            parts.push(serde_json::json!({ "report": c.report, "pathways": c.pathway_names() }));
        }
        parts.push(serde_json::json!({ "stage": stage, "pathway": pathway }));
        sha256_hex(serde_json::to_string(&parts).expect("serializable").as_bytes())
    }

    fn require(&self, stage: &str, pathway: &str) -> Result<(), PipelineError> {
        self.manifest()?
            .require(self.output_dir(), &format!("{stage}:{pathway}"), &self.fingerprint(stage, Some(pathway)))
    }

    fn build(&self, p: &PathwayConfig) -> Result<PathwayModel, PipelineError> {
        Ok(self.inputs.build(p)?)
    }

    pub fn optimize(&self) -> Result<Vec<OptimumRecord>, PipelineError> {
        self.ensure_output_dir()?;
        let dir = self.output_dir();
        let results: Vec<(OptimumRecord, StageRecord)> = self
            .config
            .pathway_configs()?
            .par_iter()
            .map(|p| {
                let t = Instant::now();
                let name = p.name();
                let model = self.build(p)?;
                let lp = model.lp.with_cost_objective();
                let mut solver = SimplexSolver::new(&lp, SolverOptions::default()).map_err(MaaError::from)?;
                let solution = solver.solve().map_err(MaaError::from)?;
                if !solution.is_optimal() {
                    let (stage, detail) = diagnose_infeasible(&model.lp, &solution.x);
                    return Err(PipelineError::Infeasible {
                        pathway: name,
                        stage,
                        detail,
                    });
                }
                let record = OptimumRecord {
                    pathway: name.clone(),
                    f_star: solution.objective_value,
                    metrics: PathwayMetrics::compute(&solution, &model)?,
                };
                let out = write_json(dir, &optimum_path(&name), &record)?;
                log::info!("optimized {name}: LCOH {:.2} EUR/MWh", record.metrics.lcoh_eur_per_mwh);
                Ok((
                    record,
                    StageRecord {
                        fingerprint: self.fingerprint("optimize", Some(&name)),
                        outputs: vec![out],
                        seconds: t.elapsed().as_secs_f64(),
                    },
                ))
            })
            .collect::<Result<_, PipelineError>>()?;
        let records: Vec<OptimumRecord> = results.iter().map(|r| r.0.clone()).collect();
        let mut stage_records: Vec<(String, StageRecord)> =
            results.into_iter().map(|(o, s)| (format!("optimize:{}", o.pathway), s)).collect();
        let csv_out = self.write_summary_csv(&records)?;
        stage_records.push((
            "optimize".into(),
            StageRecord {
                fingerprint: self.fingerprint("optimize", None),
                outputs: csv_out,
                seconds: 0.0,
            },
        ));
        self.commit(stage_records)?;
        Ok(records)
    }

    fn write_summary_csv(&self, records: &[OptimumRecord]) -> Result<Vec<OutputRecord>, PipelineError> {
        let mut summary = csv::Writer::from_writer(Vec::new());
        summary.write_record(["pathway", "objective_meur", "lcoh_eur_per_mwh", "lcoe_eur_per_mwh", "energy_consumption"])?;
        let mut detail = csv::Writer::from_writer(Vec::new());
        detail.write_record(["pathway", "component", "capacity", "cost_eur_per_mwh"])?;
        for r in records {
            let m = &r.metrics;
            summary.write_record([
                r.pathway.clone(),
                m.objective_meur.to_string(),
                m.lcoh_eur_per_mwh.to_string(),
                m.lcoe_eur_per_mwh.to_string(),
                m.energy_consumption.to_string(),
            ])?;
            for (c, cap) in &m.capacities {
                let cost = m.cost_breakdown_eur_per_mwh.get(c).copied().unwrap_or(0.0);
                detail.write_record([r.pathway.clone(), c.clone(), cap.to_string(), cost.to_string()])?;
            }
        }
        let into = |w: csv::Writer<Vec<u8>>| w.into_inner().map_err(|e| PipelineError::Runtime(e.to_string()));
        Ok(vec![
            write_bytes(self.output_dir(), "optimize/summary.csv", &into(summary)?)?,
            write_bytes(self.output_dir(), "optimize/components.csv", &into(detail)?)?,
        ])
    }

    pub fn maa(&self) -> Result<Vec<MaaResult>, PipelineError> {
        let dir = self.output_dir();
        let configs = self.config.pathway_configs()?;
        for p in &configs {
            self.require("optimize", &p.name())?;
        }
        let results: Vec<(MaaResult, String, StageRecord)> = configs
            .par_iter()
            .map(|p| {
                let t = Instant::now();
                let name = p.name();
                let model = self.build(p)?;
                let res = run_maa(&model.lp, &self.config.maa)?;
                let out = write_json(dir, &hull_path(&name), &res)?;
                log::info!("maa {name}: volume {:.4e} after {} iterations", res.volume(), res.iterations.len());
                Ok((
                    res,
                    name.clone(),
                    StageRecord {
                        fingerprint: self.fingerprint("maa", Some(&name)),
                        outputs: vec![out],
                        seconds: t.elapsed().as_secs_f64(),
                    },
                ))
            })
            .collect::<Result<_, PipelineError>>()?;
        let mut hulls = Vec::new();
        let mut records = Vec::new();
        for (h, name, s) in results {
            hulls.push(h);
            records.push((format!("maa:{name}"), s));
        }
        self.commit(records)?;
        Ok(hulls)
    }

    pub fn load_hull(&self, pathway: &str) -> Result<MaaResult, PipelineError> {
        read_json(self.output_dir(), &hull_path(pathway))
    }

    pub fn sample(&self) -> Result<Vec<(SampleSet, VerificationReport)>, PipelineError> {
        let dir = self.output_dir();
        let configs = self.config.pathway_configs()?;
        for p in &configs {
            self.require("maa", &p.name())?;
        }
        let results: Vec<(String, SampleSet, VerificationReport, StageRecord)> = configs
            .iter()
            .map(|p| {
                let t = Instant::now();
                let name = p.name();
                let hull = self.load_hull(&name)?;
                let seed = pathway_seed(self.config.seed, &name);
                let mut set = sample(&hull.hull, self.config.sample.n, seed)?.with_carrier(p.carrier.as_str());
                set.variables = self.config.maa.mga_variables.clone();
                set.units = set.variables.iter().map(|v| mga_unit(v).to_string()).collect();
                let model = self.build(p)?;
                let report = verify_near_optimal(
                    &set,
                    &model.lp,
                    hull.f_star,
                    self.config.maa.epsilon,
                    &VerifyOptions {
                        fraction: self.config.sample.verify_fraction,
                        seed,
                        ..VerifyOptions::default()
                    },
                )?;
                attach_costs(&mut set, &report);
                if !report.all_verified() {
                    log::warn!(
                        "{name}: {} of {} checked samples exceed the cost cap, {} indeterminate",
                        report.violations.len(),
                        report.checked.len(),
                        report.indeterminate.len()
                    );
                }
                let rel = samples_path(&name);
                let mut outputs = write_sample_file(dir, &rel, &set)?;
                outputs.push(write_json(dir, &verify_path(&name), &VerifySummary::of(&report))?);
                log::info!("sampled {name}: {} rows, {}/{} verified", set.len(), report.verified, report.checked.len());
                Ok((
                    name.clone(),
                    set,
                    report,
                    StageRecord {
                        fingerprint: self.fingerprint("sample", Some(&name)),
                        outputs,
                        seconds: t.elapsed().as_secs_f64(),
                    },
                ))
            })
            .collect::<Result<_, PipelineError>>()?;
        let mut out = Vec::new();
        let mut records = Vec::new();
        for (name, set, report, s) in results {
            records.push((format!("sample:{name}"), s));
            out.push((set, report));
        }
        self.commit(records)?;
        Ok(out)
    }

    /// Sample sets of every configured pathway, concatenated in config order.
    pub fn load_samples(&self) -> Result<SampleSet, PipelineError> {
        let sets = self
            .config
            .pathway_names()
            .iter()
            .map(|n| read_samples(&self.output_dir().join(samples_path(n))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SampleSet::concat(&sets)?)
    }

    pub fn cluster(&self) -> Result<ClusterExport, PipelineError> {
        for n in self.config.pathway_names() {
            self.require("sample", &n)?;
        }
        let t = Instant::now();
        let dir = self.output_dir();
        let mut set = self.load_samples()?;
        let (data, model) = cluster_samples(&set, &self.config.cluster, self.config.seed)?;
        let export = ClusterExport::new(&model, &data);
        set.labels = Some(model.labels.clone());
        let mut outputs = vec![write_json(dir, CLUSTERS_JSON, &export)?];
        outputs.extend(write_sample_file(dir, LABELED_SAMPLES, &set)?);
        self.commit(vec![(
            "cluster".into(),
            StageRecord {
                fingerprint: self.fingerprint("cluster", None),
                outputs,
                seconds: t.elapsed().as_secs_f64(),
            },
        )])?;
        Ok(export)
    }

    pub fn tree(&self) -> Result<DecisionTree, PipelineError> {
        let dir = self.output_dir();
        let t = Instant::now();
        let set = match self.config.tree.labels {
            TreeLabels::Clusters => {
                self.manifest()?.require(dir, "cluster", &self.fingerprint("cluster", None))?;
                read_samples(&dir.join(LABELED_SAMPLES))?
            }
            TreeLabels::Carrier => {
                for n in self.config.pathway_names() {
                    self.require("sample", &n)?;
                }
                self.load_samples()?
            }
        };
        let (labels, names) = tree_labels(&set, self.config.tree.labels, &self.config.cluster, self.config.seed)?;
        let tree = fit_tree(&set, &labels, names.clone(), &self.config.tree)?;
        let after = reassign(&Dataset::physical_from_samples(&set)?, &tree)?;
        let count = |l: &[usize]| {
            let mut c = vec![0; names.len()];
            for &x in l {
                c[x] += 1;
            }
            c
        };
        let reassignment = Reassignment {
            class_names: names.clone(),
            before: count(&labels),
            after: count(&after),
            changed: labels.iter().zip(&after).filter(|(a, b)| a != b).count(),
            tree_accuracy: tree.accuracy,
        };
        let outputs = vec![
            write_json(dir, TREE_JSON, &tree)?,
            write_bytes(dir, TREE_DOT, tree.to_dot().as_bytes())?,
            write_json(dir, REASSIGNED_JSON, &reassignment)?,
        ];
        self.commit(vec![(
            "tree".into(),
            StageRecord {
                fingerprint: self.fingerprint("tree", None),
                outputs,
                seconds: t.elapsed().as_secs_f64(),
            },
        )])?;
        Ok(tree)
    }

    pub fn pathway_report(&self, p: &PathwayConfig) -> Result<PathwayReport, PipelineError> {
        let name = p.name();
        let dir = self.output_dir();
        let optimum: OptimumRecord = read_json(dir, &optimum_path(&name))?;
        let hull = self.load_hull(&name)?;
        let set = read_samples(&dir.join(samples_path(&name)))?;
        let verify: VerifySummary = read_json(dir, &verify_path(&name))?;
        let bounds = hull.hull.bounds();
        let mut ranges = Vec::new();
        let mut histograms = Vec::new();
        for (j, v) in set.variables.iter().enumerate() {
            let (lo, hi) = bounds[j];
            let unit = set.units[j].clone();
            ranges.push(VariableRange {
                variable: v.clone(),
                unit: unit.clone(),
                min: lo,
                max: hi,
            });
            histograms.push(Histogram::new(v, &unit, set.rows().map(|r| r[j]), lo, hi, self.config.report.bins, Some(hull.optimum[j])));
        }
        let finite: Vec<f64> = set.cost.iter().flatten().copied().filter(|c| c.is_finite()).collect();
        let cost = (!finite.is_empty()).then(|| CostStats {
            checked: verify.checked,
            verified: verify.verified,
            min: finite.iter().copied().fold(f64::INFINITY, f64::min),
            mean: finite.iter().sum::<f64>() / finite.len() as f64,
            max: finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
        Ok(PathwayReport {
            pathway: name.clone(),
            carrier: p.carrier.as_str().to_string(),
            epsilon: hull.config.epsilon,
            f_star: hull.f_star,
            lcoh_eur_per_mwh: optimum.metrics.lcoh_eur_per_mwh,
            metrics: optimum.metrics,
            optimum: set.variables.iter().cloned().zip(hull.optimum.iter().copied()).collect(),
            ranges,
            hull_volume: hull.volume(),
            maa_iterations: hull.iterations.len(),
            maa_converged: hull.converged,
            n_samples: set.len(),
            samples_file: samples_path(&name),
            histograms,
            cost,
        })
    }

    pub fn report(&self) -> Result<ReportBundle, PipelineError> {
        let dir = self.output_dir();
        let t = Instant::now();
        let configs = self.config.pathway_configs()?;
        for p in &configs {
            self.require("optimize", &p.name())?;
            self.require("maa", &p.name())?;
            self.require("sample", &p.name())?;
        }
        let mut outputs = Vec::new();
        let mut reports = Vec::new();
        for p in &configs {
            let r = self.pathway_report(p)?;
            outputs.push(write_json(dir, &report_path(&r.pathway), &r)?);
            reports.push(r);
        }
        let manifest = self.manifest()?;
        let clusters = manifest
            .require(dir, "cluster", &self.fingerprint("cluster", None))
            .ok()
            .map(|_| read_json(dir, CLUSTERS_JSON))
            .transpose()?;
        let tree = manifest
            .require(dir, "tree", &self.fingerprint("tree", None))
            .ok()
            .map(|_| read_json(dir, TREE_JSON))
            .transpose()?;
        let bundle = ReportBundle {
            pathways: reports,
            clusters,
            tree,
        };
        outputs.push(write_json(dir, BUNDLE_JSON, &bundle)?);
        self.commit(vec![(
            "report".into(),
            StageRecord {
                fingerprint: self.fingerprint("report", None),
                outputs,
                seconds: t.elapsed().as_secs_f64(),
            },
        )])?;
        Ok(bundle)
    }

    /// Every stage in order.
    pub fn run_all(&self) -> Result<ReportBundle, PipelineError> {
        self.optimize()?;
        self.maa()?;
        self.sample()?;
        self.cluster()?;
        self.tree()?;
        self.report()
    }

    pub fn output_path(&self, rel: &str) -> PathBuf {
        self.output_dir().join(rel)
    }
}

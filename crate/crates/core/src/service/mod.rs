//! HTTP JSON API over a finished run: filter the sample cloud, refit trees
//! on subsets and queue bounded MAA reruns.

mod jobs;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Semaphore;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use jobs::{JobQueue, JobRecord, JobStatus, MaaJobRequest, MaaJobResult};

use crate::pipeline::{
    cluster_samples, fit_tree, tree_labels, CostStats, Histogram, Pipeline, PipelineError, PathwayReport, ReportBundle, TreeConfig,
    TreeLabels, VariableRange, BUNDLE_JSON,
};
use crate::sampler::SampleSet;

pub const OPENAPI: &str = include_str!("openapi.json");

/// Everything the service reads; never mutated after loading.
#[derive(Debug)]
pub struct ServiceData {
    pub pipeline: Pipeline,
    pub reports: Vec<PathwayReport>,
    /// Every pathway's samples in config order.
    pub samples: SampleSet,
    /// Pathway of each row, run-length encoded.
    pub pathway_runs: Vec<(String, usize)>,
    /// Histogram range per variable across all loaded hulls.
    pub ranges: Vec<(f64, f64)>,
}

impl ServiceData {
    /// Loads the report bundle and samples of a finished run.
    pub fn load(pipeline: Pipeline) -> Result<Self, PipelineError> {
        let dir = pipeline.output_dir().to_path_buf();
        let manifest_key = pipeline.fingerprint("report", None);
        let manifest: crate::pipeline::RunManifest = {
            let path = dir.join(crate::pipeline::MANIFEST_FILE);
            let bytes = std::fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
            serde_json::from_slice(&bytes)?
        };
        manifest.require(&dir, "report", &manifest_key)?;
        let path = dir.join(BUNDLE_JSON);
        let bytes = std::fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
        let bundle: ReportBundle = serde_json::from_slice(&bytes)?;
        let samples = pipeline.load_samples()?;
        let pathway_runs = bundle.pathways.iter().map(|r| (r.pathway.clone(), r.n_samples)).collect();
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); samples.dim()];
        for r in &bundle.pathways {
            for (j, v) in r.ranges.iter().enumerate() {
                ranges[j].0 = ranges[j].0.min(v.min);
                ranges[j].1 = ranges[j].1.max(v.max);
            }
        }
        Ok(Self {
            pipeline,
            reports: bundle.pathways,
            samples,
            pathway_runs,
            ranges,
        })
    }

    fn pathway_of_rows(&self) -> Vec<&str> {
        self.pathway_runs
            .iter()
            .flat_map(|(p, k)| std::iter::repeat_n(p.as_str(), *k))
            .collect()
    }

    /// Rows passing every constraint of `req`, in order.
    pub fn filter_rows(&self, req: &FilterRequest) -> Result<Vec<usize>, ApiError> {
        let vars = &self.samples.variables;
        let mut bounds = Vec::new();
        for (name, b) in &req.bounds {
            let j = self.samples.column_index(name).ok_or_else(|| ApiError::UnknownVariable {
                variable: name.clone(),
                variables: vars.clone(),
            })?;
            let lo = b.min.unwrap_or(f64::NEG_INFINITY);
            let hi = b.max.unwrap_or(f64::INFINITY);
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(ApiError::BadRequest(format!("bounds for {name} need min <= max")));
            }
            bounds.push((j, lo, hi));
        }
        let known_pathways: Vec<String> = self.reports.iter().map(|r| r.pathway.clone()).collect();
        if let Some(ps) = &req.pathways {
            if let Some(p) = ps.iter().find(|p| !known_pathways.contains(p)) {
                return Err(ApiError::BadRequest(format!(
                    "pathway `{p}` is not loaded; loaded: {}",
                    known_pathways.join(", ")
                )));
            }
        }
        let tags = self.samples.carrier_tags().unwrap_or_default();
        if let Some(cs) = &req.carriers {
            let mut known: Vec<&str> = self.reports.iter().map(|r| r.carrier.as_str()).collect();
            known.dedup();
            if let Some(c) = cs.iter().find(|c| !known.contains(&c.as_str())) {
                return Err(ApiError::BadRequest(format!(
                    "carrier `{c}` is not loaded; loaded: {}",
                    known.join(", ")
                )));
            }
        }
        let pathway_of = self.pathway_of_rows();
        Ok((0..self.samples.len())
            .filter(|&i| {
                req.pathways.as_ref().is_none_or(|ps| ps.iter().any(|p| p == pathway_of[i]))
                    && req.carriers.as_ref().is_none_or(|cs| cs.iter().any(|c| *c == tags[i]))
                    && bounds.iter().all(|&(j, lo, hi)| {
                        let v = self.samples.row(i)[j];
                        v >= lo && v <= hi
                    })
            })
            .collect())
    }

    pub fn filter(&self, req: &FilterRequest) -> Result<FilterResponse, ApiError> {
        let rows = self.filter_rows(req)?;
        let total = self.samples.len();
        let tags = self.samples.carrier_tags().unwrap_or_default();
        let pathway_of = self.pathway_of_rows();
        let mut carrier_counts = BTreeMap::new();
        let mut pathway_counts = BTreeMap::new();
        for r in &self.reports {
            carrier_counts.insert(r.carrier.clone(), 0);
            pathway_counts.insert(r.pathway.clone(), 0);
        }
        for &i in &rows {
            *carrier_counts.entry(tags[i].clone()).or_insert(0) += 1;
            *pathway_counts.entry(pathway_of[i].to_string()).or_insert(0) += 1;
        }
        let single = match &req.pathways {
            Some(ps) if ps.len() == 1 => self.reports.iter().find(|r| r.pathway == ps[0]),
            _ if self.reports.len() == 1 => self.reports.first(),
            _ => None,
        };
        let bins = self.pipeline.config.report.bins;
        let histograms = self
            .samples
            .variables
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let (lo, hi) = self.ranges[j];
                let opt = single.and_then(|r| r.optimum.get(v).copied());
                Histogram::new(v, &self.samples.units[j], rows.iter().map(|&i| self.samples.row(i)[j]), lo, hi, bins, opt)
            })
            .collect();
        let cost = self.samples.cost.as_ref().and_then(|c| {
            let checked: Vec<f64> = rows.iter().map(|&i| c[i]).filter(|v| !v.is_nan()).collect();
            let finite: Vec<f64> = checked.iter().copied().filter(|v| v.is_finite()).collect();
            (!finite.is_empty()).then(|| CostStats {
                checked: checked.len(),
                verified: 0,
                min: finite.iter().copied().fold(f64::INFINITY, f64::min),
                mean: finite.iter().sum::<f64>() / finite.len() as f64,
                max: finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
        });
        Ok(FilterResponse {
            total,
            surviving: rows.len(),
            surviving_fraction: if total == 0 { 0.0 } else { rows.len() as f64 / total as f64 },
            histograms,
            carrier_counts,
            pathway_counts,
            cost,
        })
    }

    /// Tree on the filtered subset, as the same JSON bytes the CLI writes.
    pub fn tree(&self, req: &FilterRequest) -> Result<Vec<u8>, ApiError> {
        let rows = self.filter_rows(req)?;
        let config = &self.pipeline.config;
        let params = req.tree.clone().unwrap_or_default();
        let tree_config = TreeConfig {
            max_depth: params.max_depth.unwrap_or(config.tree.max_depth),
            min_leaf: params.min_leaf.or(config.tree.min_leaf),
            labels: params.labels.unwrap_or(config.tree.labels),
        };
        if tree_config.max_depth == 0 || tree_config.min_leaf == Some(0) {
            return Err(ApiError::BadRequest("max_depth and min_leaf must be positive".into()));
        }
        let min_leaf = tree_config
            .min_leaf
            .unwrap_or_else(|| ((rows.len() as f64 * 0.01).floor() as usize).max(1));
        if rows.len() < 2 * min_leaf {
            return Err(ApiError::Degenerate(format!(
                "{} surviving rows cannot fill two leaves of {min_leaf}",
                rows.len()
            )));
        }
        let subset = self.samples.subset(&rows);
        let (labels, names) = tree_labels(&subset, tree_config.labels, &config.cluster, config.seed).map_err(degenerate)?;
        let mut present = labels.clone();
        present.sort_unstable();
        present.dedup();
        if present.len() < 2 {
            return Err(ApiError::Degenerate(format!(
                "surviving rows carry a single class ({})",
                names[present.first().copied().unwrap_or(0)]
            )));
        }
        let tree = fit_tree(&subset, &labels, names, &tree_config).map_err(degenerate)?;
        let mut bytes = serde_json::to_vec_pretty(&tree).map_err(|e| ApiError::Internal(e.to_string()))?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    /// Cluster labels of the full loaded set, as the cluster stage computes them.
    pub fn cluster_labels(&self) -> Result<Vec<usize>, PipelineError> {
        let c = &self.pipeline.config;
        Ok(cluster_samples(&self.samples, &c.cluster, c.seed)?.1.labels)
    }

    pub fn catalog(&self) -> Vec<PathwaySummary> {
        self.reports
            .iter()
            .map(|r| PathwaySummary {
                pathway: r.pathway.clone(),
                carrier: r.carrier.clone(),
                epsilon: r.epsilon,
                n_samples: r.n_samples,
                f_star: r.f_star,
                lcoh_eur_per_mwh: r.lcoh_eur_per_mwh,
                ranges: r.ranges.clone(),
                optimum: r.optimum.clone(),
                cost: r.cost.clone(),
            })
            .collect()
    }
}

fn degenerate(e: PipelineError) -> ApiError {
    ApiError::Degenerate(e.to_string())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bound {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: Option<usize>,
    pub labels: Option<TreeLabels>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterRequest {
    /// Keep only these pathways; absent keeps all.
    pub pathways: Option<Vec<String>>,
    pub carriers: Option<Vec<String>>,
    /// Per-variable bounds in physical units.
    pub bounds: BTreeMap<String, Bound>,
    pub tree: Option<TreeParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterResponse {
    pub total: usize,
    pub surviving: usize,
    pub surviving_fraction: f64,
    pub histograms: Vec<Histogram>,
    pub carrier_counts: BTreeMap<String, usize>,
    pub pathway_counts: BTreeMap<String, usize>,
    /// Over surviving rows whose cost was re-solved.
    pub cost: Option<CostStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwaySummary {
    pub pathway: String,
    pub carrier: String,
    pub epsilon: f64,
    pub n_samples: usize,
    pub f_star: f64,
    pub lcoh_eur_per_mwh: f64,
    pub ranges: Vec<VariableRange>,
    pub optimum: BTreeMap<String, f64>,
    pub cost: Option<CostStats>,
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("unknown variable `{variable}`")]
    UnknownVariable { variable: String, variables: Vec<String> },
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Unavailable(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            Self::UnknownVariable { .. } | Self::BadRequest(_) => StatusCode::BAD_REQUEST,
            Self::Degenerate(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Self::NotFound(_) => StatusCode::NOT_FOUND,
            Self::Unavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            Self::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = match &self {
            Self::UnknownVariable { variables, .. } => json!({ "error": self.to_string(), "variables": variables }),
            _ => json!({ "error": self.to_string() }),
        };
        (self.status(), Json(body)).into_response()
    }
}

#[derive(Clone)]
pub struct AppState {
    pub data: Arc<ServiceData>,
    tree_workers: Arc<Semaphore>,
    pub jobs: JobQueue,
}

impl AppState {
    /// Must be called inside a tokio runtime; starts the MAA job worker.
    pub fn new(data: ServiceData) -> Self {
        let workers = data.pipeline.config.service.tree_workers.max(1);
        let data = Arc::new(data);
        let jobs = JobQueue::start(data.clone());
        Self {
            data,
            tree_workers: Arc::new(Semaphore::new(workers)),
            jobs,
        }
    }
}

fn json_request<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("invalid request body: {e}")))
}

async fn pathways(State(state): State<AppState>) -> Json<Vec<PathwaySummary>> {
    Json(state.data.catalog())
}

async fn filter(State(state): State<AppState>, body: axum::body::Bytes) -> Result<Json<FilterResponse>, ApiError> {
    let req: FilterRequest = json_request(&body)?;
    let data = state.data.clone();
    let out = tokio::task::spawn_blocking(move || data.filter(&req))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(out))
}

async fn tree(State(state): State<AppState>, body: axum::body::Bytes) -> Result<Response, ApiError> {
    let req: FilterRequest = json_request(&body)?;
    let _permit = state
        .tree_workers
        .acquire()
        .await
        .map_err(|e| ApiError::Unavailable(e.to_string()))?;
    let data = state.data.clone();
    let bytes = tokio::task::spawn_blocking(move || data.tree(&req))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(([(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))], bytes).into_response())
}

async fn submit_job(State(state): State<AppState>, body: axum::body::Bytes) -> Result<Response, ApiError> {
    let req: MaaJobRequest = json_request(&body)?;
    let record = state.jobs.submit(req)?;
    Ok((StatusCode::ACCEPTED, Json(record)).into_response())
}

async fn job(State(state): State<AppState>, UrlPath(id): UrlPath<u64>) -> Result<Json<JobRecord>, ApiError> {
    state
        .jobs
        .get(id)
        .map(Json)
        .ok_or_else(|| ApiError::NotFound(format!("no job {id}")))
}

async fn spec() -> Response {
    ([(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))], OPENAPI).into_response()
}

pub fn router(state: AppState) -> Router {
    let origin = match &state.data.pipeline.config.service.allow_origin {
        Some(o) => match HeaderValue::from_str(o) {
            Ok(v) => AllowOrigin::exact(v),
            Err(_) => AllowOrigin::any(),
        },
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([axum::http::Method::GET, axum::http::Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/pathways", get(pathways))
        .route("/filter", post(filter))
        .route("/tree", post(tree))
        .route("/maa-jobs", post(submit_job))
        .route("/jobs/{id}", get(job))
        .route("/spec", get(spec))
        .layer(cors)
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(data: ServiceData, port: u16) -> Result<(), PipelineError> {
    let state = AppState::new(data);
    let addr = SocketAddr::from(([0, 0, 0, 0], port));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| PipelineError::Runtime(format!("cannot bind {addr}: {e}")))?;
    log::info!("listening on {addr}");
    axum::serve(listener, router(state))
        .await
        .map_err(|e| PipelineError::Runtime(e.to_string()))
}

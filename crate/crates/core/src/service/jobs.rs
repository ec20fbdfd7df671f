//! FIFO queue of bounded MAA reruns with status persisted under `jobs/`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;

use super::{ApiError, Bound, ServiceData};
use crate::maa::run_maa;
use crate::model::parse_pathway_name;
use crate::pipeline::{PipelineError, VariableRange};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaaJobRequest {
    pub pathway: String,
    /// Hard bounds on MGA capacities, in physical units.
    #[serde(default)]
    pub bounds: BTreeMap<String, Bound>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Capped at the run's own iteration budget.
    #[serde(default)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaaJobResult {
    /// Optimum of the bounded problem; the cap is relative to it.
    pub f_star: f64,
    pub cap: f64,
    /// Optimum of the unbounded run, for comparison.
    pub reference_f_star: Option<f64>,
    pub volume: f64,
    pub iterations: usize,
    pub converged: bool,
    pub ranges: Vec<VariableRange>,
    /// Relative to the output directory.
    pub hull_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: u64,
    pub status: JobStatus,
    pub request: MaaJobRequest,
    pub result: Option<MaaJobResult>,
    pub error: Option<String>,
}

#[derive(Clone)]
pub struct JobQueue {
    jobs: Arc<Mutex<BTreeMap<u64, JobRecord>>>,
    sender: mpsc::UnboundedSender<u64>,
    data: Arc<ServiceData>,
}

fn jobs_dir(data: &ServiceData) -> PathBuf {
    data.pipeline.output_dir().join("jobs")
}

fn persist(data: &ServiceData, record: &JobRecord) {
    let dir = jobs_dir(data);
    let write = || -> std::io::Result<()> {
        std::fs::create_dir_all(&dir)?;
        let mut bytes = serde_json::to_vec_pretty(record).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        std::fs::write(dir.join(format!("{}.json", record.id)), bytes)
    };
    if let Err(e) = write() {
        log::warn!("cannot persist job {}: {e}", record.id);
    }
}

/// Earlier jobs from disk; unfinished ones are marked failed.
fn restore(data: &ServiceData) -> BTreeMap<u64, JobRecord> {
    let mut out = BTreeMap::new();
    let Ok(entries) = std::fs::read_dir(jobs_dir(data)) else {
        return out;
    };
    for entry in entries.flatten() {
        let path = entry.path();
        if path.extension().is_none_or(|e| e != "json") || path.to_string_lossy().ends_with(".hull.json") {
            continue;
        }
        let Ok(bytes) = std::fs::read(&path) else { continue };
        let Ok(mut record) = serde_json::from_slice::<JobRecord>(&bytes) else { continue };
        if matches!(record.status, JobStatus::Queued | JobStatus::Running) {
            record.status = JobStatus::Failed;
            record.error = Some("interrupted by a service restart".into());
            persist(data, &record);
        }
        out.insert(record.id, record);
    }
    out
}

fn run_job(data: &ServiceData, id: u64, req: &MaaJobRequest) -> Result<MaaJobResult, PipelineError> {
    let pipeline = &data.pipeline;
    let config = pipeline
        .config
        .pathway_configs()?
        .into_iter()
        .find(|p| p.name() == req.pathway)
        .ok_or_else(|| PipelineError::Config(format!("pathway {} is not configured", req.pathway)))?;
    let model = pipeline.inputs.build(&config)?;
    let mut lp = model.lp.clone();
    for (tag, b) in &req.bounds {
        let col = lp.mga_column(tag).map_err(|e| PipelineError::Runtime(e.to_string()))?;
        let lo = b.min.unwrap_or(f64::NEG_INFINITY).max(lp.lower()[col]);
        let hi = b.max.unwrap_or(f64::INFINITY).min(lp.upper()[col]);
        lp = lp.with_bounds(col, lo, hi).map_err(|e| PipelineError::Runtime(e.to_string()))?;
    }
    let mut maa = pipeline.config.maa.clone();
    if let Some(e) = req.epsilon {
        maa.epsilon = e;
    }
    if let Some(m) = req.max_iterations {
        maa.max_iterations = m.min(maa.max_iterations);
    }
    let res = run_maa(&lp, &maa)?;
    let hull_file = format!("jobs/{id}.hull.json");
    let mut bytes = serde_json::to_vec_pretty(&res)?;
    bytes.push(b'\n');
    let path = pipeline.output_dir().join(&hull_file);
    std::fs::create_dir_all(path.parent().expect("has parent")).map_err(|e| PipelineError::io(&path, e))?;
    std::fs::write(&path, bytes).map_err(|e| PipelineError::io(&path, e))?;
    let reference = data.reports.iter().find(|r| r.pathway == req.pathway).map(|r| r.f_star);
    Ok(MaaJobResult {
        f_star: res.f_star,
        cap: res.cap,
        reference_f_star: reference,
        volume: res.volume(),
        iterations: res.iterations.len(),
        converged: res.converged,
        ranges: maa
            .mga_variables
            .iter()
            .zip(res.hull.bounds())
            .map(|(v, (lo, hi))| VariableRange {
                variable: v.clone(),
                unit: crate::model::mga_unit(v).to_string(),
                min: lo,
                max: hi,
            })
            .collect(),
        hull_file,
    })
}

impl JobQueue {
    /// Spawns the single worker that drains the queue in order.
    pub fn start(data: Arc<ServiceData>) -> Self {
        let jobs = Arc::new(Mutex::new(restore(&data)));
        let (sender, mut receiver) = mpsc::unbounded_channel::<u64>();
        let queue = Self {
            jobs: jobs.clone(),
            sender,
            data: data.clone(),
        };
        let worker = queue.clone();
        tokio::spawn(async move {
            while let Some(id) = receiver.recv().await {
                let Some(req) = worker.update(id, |r| r.status = JobStatus::Running).map(|r| r.request) else {
                    continue;
                };
                let data = worker.data.clone();
                let outcome = tokio::task::spawn_blocking(move || run_job(&data, id, &req)).await;
                worker.update(id, |r| match outcome {
                    Ok(Ok(result)) => {
                        r.status = JobStatus::Done;
                        r.result = Some(result);
                    }
                    Ok(Err(e)) => {
                        r.status = JobStatus::Failed;
                        r.error = Some(e.to_string());
                    }
                    Err(e) => {
                        r.status = JobStatus::Failed;
                        r.error = Some(format!("job panicked: {e}"));
                    }
                });
            }
        });
        queue
    }

    fn update(&self, id: u64, f: impl FnOnce(&mut JobRecord)) -> Option<JobRecord> {
        let mut jobs = self.jobs.lock().expect("job table lock");
        let record = jobs.get_mut(&id)?;
        f(record);
        persist(&self.data, record);
        Some(record.clone())
    }

    pub fn submit(&self, req: MaaJobRequest) -> Result<JobRecord, ApiError> {
        parse_pathway_name(&req.pathway).map_err(|e| ApiError::BadRequest(e.to_string()))?;
        if !self.data.reports.iter().any(|r| r.pathway == req.pathway) {
            return Err(ApiError::BadRequest(format!("pathway `{}` is not loaded", req.pathway)));
        }
        let vars = &self.data.pipeline.config.maa.mga_variables;
        for (name, b) in &req.bounds {
            if !vars.contains(name) {
                return Err(ApiError::UnknownVariable {
                    variable: name.clone(),
                    variables: vars.clone(),
                });
            }
            if b.min.zip(b.max).is_some_and(|(lo, hi)| !(lo <= hi)) {
                return Err(ApiError::BadRequest(format!("bounds for {name} need min <= max")));
            }
        }
        if req.epsilon.is_some_and(|e| !(e > 0.0 && e.is_finite())) {
            return Err(ApiError::BadRequest("epsilon must be positive".into()));
        }
        if req.max_iterations == Some(0) {
            return Err(ApiError::BadRequest("max_iterations must be positive".into()));
        }
        let record = {
            let mut jobs = self.jobs.lock().expect("job table lock");
            let id = jobs.keys().next_back().map_or(1, |k| k + 1);
            let record = JobRecord {
                id,
                status: JobStatus::Queued,
                request: req,
                result: None,
                error: None,
            };
            jobs.insert(id, record.clone());
            persist(&self.data, &record);
            record
        };
        self.sender
            .send(record.id)
            .map_err(|_| ApiError::Unavailable("job worker has stopped".into()))?;
        Ok(record)
    }

    pub fn get(&self, id: u64) -> Option<JobRecord> {
        self.jobs.lock().expect("job table lock").get(&id).cloned()
    }
}

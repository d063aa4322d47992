use std::collections::{BTreeMap, BTreeSet};

use axum::extract::{Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use tracker_core::ingest::{ingest_batch, IngestReport, RawBatchFile};
use tracker_core::model::{Cell, InstanceId};
use tracker_core::plan::plan_to_string;
use tracker_core::tracking::{
    AlgoCriterion, ExportLevel, GroupBy, InstanceRow, ProgressSummary, Scope, SeriesPoint, ScopeError,
};
use tracker_core::Cost;

use crate::params::{self, Params};
use crate::{ApiError, AppState, JobState};

#[derive(Serialize)]
pub struct ProgressBody {
    summary: ProgressSummary<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    group_by: Option<GroupBy>,
    groups: Vec<ProgressSummary<f64>>,
}

/// The next level down: domains, then maps, then scenarios.
fn default_grouping(scope: &Scope) -> Option<GroupBy> {
    if scope.scenario.is_some() {
        None
    } else if scope.map.is_some() {
        Some(GroupBy::Scenario)
    } else if scope.domain.is_some() {
        Some(GroupBy::Map)
    } else {
        Some(GroupBy::Domain)
    }
}

pub async fn progress(State(s): State<AppState>, Query(p): Query<Params>) -> Result<Json<ProgressBody>, ApiError> {
    let scope = params::scope(&p)?;
    let group_by = match params::parsed::<GroupBy>(&p, "group_by")? {
        Some(g) => Some(g),
        None => default_grouping(&scope),
    };
    let t = s.read();
    let summary = t.progress_summary(&scope)?;
    let groups = match group_by {
        Some(g) => t.progress_grouped(&scope, g)?,
        None => Vec::new(),
    };
    Ok(Json(ProgressBody { summary, group_by, groups }))
}

#[derive(Serialize)]
pub struct ComparisonBody {
    metric: AlgoCriterion,
    series: BTreeMap<String, Vec<SeriesPoint<f64>>>,
}

pub async fn comparison(State(s): State<AppState>, Query(p): Query<Params>) -> Result<Json<ComparisonBody>, ApiError> {
    let scope = params::scope(&p)?;
    let metric: AlgoCriterion = params::parsed(&p, "metric")
        .map_err(|e| ApiError::bad_request("UnknownMetric", e.detail))?
        .ok_or_else(|| ApiError::bad_request("MissingParameter", "metric is required"))?;
    let algorithms = params::list(&p, "algorithms");
    let series = s.read().comparison_series(&scope, metric, algorithms.as_deref())?;
    Ok(Json(ComparisonBody { metric, series }))
}

const DEFAULT_PAGE: u64 = 100;
const MAX_PAGE: u64 = 10_000;

#[derive(Serialize)]
pub struct InstancesBody {
    total: u64,
    offset: u64,
    limit: u64,
    rows: Vec<InstanceRow>,
}

pub async fn instances(State(s): State<AppState>, Query(p): Query<Params>) -> Result<Json<InstancesBody>, ApiError> {
    let scope = params::scope(&p)?;
    let offset = params::parsed(&p, "offset")?.unwrap_or(0);
    let limit = params::parsed(&p, "limit")?.unwrap_or(DEFAULT_PAGE).min(MAX_PAGE);
    let (total, rows) = s.read().instance_rows(&scope, offset, Some(limit))?;
    Ok(Json(InstancesBody { total, offset, limit, rows }))
}

#[derive(Serialize)]
pub struct MapRef {
    name: String,
    width: u32,
    height: u32,
    /// The map in its text format.
    grid: String,
}

#[derive(Serialize)]
pub struct Pair {
    start: Cell,
    goal: Cell,
}

#[derive(Serialize)]
pub struct PlanBody {
    instance: InstanceId,
    map: MapRef,
    pairs: Vec<Pair>,
    plans: Vec<String>,
    cost: Cost,
    holders: BTreeSet<String>,
    plan_batch: String,
}

pub async fn plan(State(s): State<AppState>, Query(p): Query<Params>) -> Result<Json<PlanBody>, ApiError> {
    let id = params::instance(&p)?;
    let t = s.read();
    let (map, pairs) = t.benchmark.instance(&id).ok_or_else(|| {
        let scen = id.scenario();
        if t.benchmark.map(&id.map_name).is_none() {
            ApiError::from(ScopeError::UnknownMap(id.map_name.clone()))
        } else if t.benchmark.scenario(&scen).is_none() {
            ScopeError::UnknownScenario(scen).into()
        } else {
            ApiError::not_found("UnknownInstance", format!("{scen} has fewer than {} agents", id.agents))
        }
    })?;
    let best = t
        .store
        .record(&id)
        .and_then(|r| r.best_cost.as_ref())
        .ok_or_else(|| ApiError::not_found("NoSolution", "no solution recorded for this instance"))?;
    Ok(Json(PlanBody {
        instance: id.clone(),
        map: MapRef { name: map.name().to_string(), width: map.width(), height: map.height(), grid: map.to_text() },
        pairs: pairs.into_iter().map(|(start, goal)| Pair { start, goal }).collect(),
        plans: best.plan.plans().iter().map(|a| plan_to_string(a)).collect(),
        cost: best.value,
        holders: best.holders.clone(),
        plan_batch: best.plan_batch.0.clone(),
    }))
}

pub async fn export(State(s): State<AppState>, Query(p): Query<Params>) -> Result<Response, ApiError> {
    let scope = params::scope(&p)?;
    let level = params::parsed(&p, "level")?.unwrap_or(ExportLevel::Instance);
    let table = s.read().export_results(&scope, level)?;
    let name = match level {
        ExportLevel::Instance => "instance",
        ExportLevel::Scenario => "scenario",
        ExportLevel::Map => "map",
        ExportLevel::Domain => "domain",
    };
    let disposition = format!("attachment; filename=\"mapf-results-{name}.csv\"");
    Ok((
        [(header::CONTENT_TYPE, "text/csv; charset=utf-8".to_string()), (header::CONTENT_DISPOSITION, disposition)],
        table.to_csv(),
    )
        .into_response())
}

#[derive(Serialize)]
pub struct JobBody {
    job: u64,
    #[serde(flatten)]
    state: JobState,
}

/// Multipart upload with a `descriptor` part (TOML) and a `csv` part.
pub async fn submit(State(s): State<AppState>, mut form: Multipart) -> Result<Response, ApiError> {
    let malformed = |e: axum::extract::multipart::MultipartError| {
        ApiError::new(e.status(), if e.status() == StatusCode::PAYLOAD_TOO_LARGE { "UploadTooLarge" } else { "MalformedUpload" }, e.body_text())
    };
    let (mut descriptor, mut csv) = (None, None);
    while let Some(field) = form.next_field().await.map_err(malformed)? {
        let name = field.name().unwrap_or_default().to_string();
        let text = field.text().await.map_err(malformed)?;
        match name.as_str() {
            "descriptor" => descriptor = Some(text),
            "csv" => csv = Some(text),
            _ => {}
        }
    }
    let (Some(descriptor), Some(csv)) = (descriptor, csv) else {
        return Err(ApiError::bad_request("MalformedUpload", "expected parts `descriptor` and `csv`"));
    };
    let batch = RawBatchFile::parse(&descriptor, &csv)?;

    if batch.rows.len() > s.config.async_threshold {
        let id = s.new_job();
        let state = s.clone();
        tokio::task::spawn_blocking(move || {
            let result = ingest(&state, &batch);
            state.set_job(id, match result {
                Ok(report) => JobState::Done { report },
                Err(e) => JobState::Failed { error: e.detail },
            });
        });
        return Ok((StatusCode::ACCEPTED, Json(JobBody { job: id, state: JobState::Pending })).into_response());
    }
    let state = s.clone();
    let report = tokio::task::spawn_blocking(move || ingest(&state, &batch))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(report).into_response())
}

fn ingest(s: &AppState, batch: &RawBatchFile) -> Result<IngestReport, ApiError> {
    let mut t = s.write();
    ingest_batch(&mut t, batch, chrono::Utc::now()).map_err(|e| ApiError::internal(e.to_string()))
}

pub async fn job(State(s): State<AppState>, Path(id): Path<u64>) -> Result<Json<JobBody>, ApiError> {
    let state = s.job(id).ok_or_else(|| ApiError::not_found("UnknownJob", format!("no submission job {id}")))?;
    Ok(Json(JobBody { job: id, state }))
}

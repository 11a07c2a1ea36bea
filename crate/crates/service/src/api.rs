use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::{to_bytes, Bytes};
use axum::extract::{FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use gaitdex::cohort::{ClinicalMetadata, Cohort};
use gaitdex::csv_io::{attach_metadata, read_cohort, read_metadata};
use gaitdex::error::GaitError;
use gaitdex::indices::{healthy_mean_curves, BasisSource, GdiFeatureBasis, GDI_FEATURES, GDI_GRID_POINTS};
use gaitdex::pipeline::{fit_pipeline, Mode, PipelineConfig};
use gaitdex::report::{score_cohort, IndexSelection, ScoreOptions, SubjectReport};
use gaitdex::variable::{Side, VariableId};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::config::ServiceConfig;
use crate::error::ApiError;
use crate::store::{FitParams, FittedModel, ModelEntry, ModelStatus, Store, StoredCohort};

pub const OPENAPI: &str = include_str!("openapi.json");
pub const GDI_BASIS_FILE: &str = "gdi_features_51x9.csv";

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub fit_slots: Arc<Semaphore>,
    pub max_upload_bytes: usize,
    /// Directory searched for the published GDI basis file.
    pub gdi_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(store: Store, config: &ServiceConfig) -> Self {
        AppState {
            store: Arc::new(store),
            fit_slots: Arc::new(Semaphore::new(config.fit_workers.max(1))),
            max_upload_bytes: config.max_upload_bytes(),
            gdi_dir: config.data_dir.clone(),
        }
    }
}

pub fn router(state: AppState) -> Router {
    let limit = state.max_upload_bytes;
    Router::new()
        .route("/openapi.json", get(openapi))
        .route("/cohorts", post(upload_cohort))
        .route("/cohorts/{id}", get(get_cohort))
        .route("/cohorts/{id}/fit", post(fit_cohort))
        .route("/models/{id}", get(get_model))
        .route("/models/{id}/report", get(get_full_report))
        .route("/models/{id}/subjects/{sid}/report", get(get_subject_report))
        .route("/models/{id}/subjects/{sid}/curves", get(get_curves))
        .route("/models/{id}/compare", get(compare_subjects))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .layer(axum::extract::DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Serialise once so repeated reads of the same state are byte-identical.
fn json_bytes<T: Serialize>(status: StatusCode, value: &T) -> Response {
    match serde_json::to_vec(value) {
        Ok(body) => (status, [(header::CONTENT_TYPE, "application/json")], body).into_response(),
        Err(e) => ApiError::internal(e.to_string()).into_response(),
    }
}

async fn openapi() -> Response {
    ([(header::CONTENT_TYPE, "application/json")], OPENAPI).into_response()
}

// ---- cohorts ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub cohort_id: String,
    pub n_subjects: usize,
    pub n_healthy: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub variables: Vec<String>,
}

impl CohortSummary {
    fn of(c: &StoredCohort) -> Self {
        CohortSummary {
            cohort_id: c.id.clone(),
            n_subjects: c.cohort.len(),
            n_healthy: c.cohort.n_healthy(),
            t: c.cohort.grid().num_points(),
            variables: c
                .cohort
                .common_variables()
                .iter()
                .map(|v| v.to_string())
                .collect(),
        }
    }
}

fn parse_upload(curves: &[u8], metadata: Option<&[u8]>) -> Result<Cohort, ApiError> {
    let cohort = read_cohort(curves).map_err(ApiError::from_upload)?;
    if cohort.is_empty() {
        return Err(ApiError::from_upload(GaitError::Data(
            "cohort file has no subjects".into(),
        )));
    }
    match metadata {
        Some(m) => {
            let meta = read_metadata(m).map_err(ApiError::from_upload)?;
            attach_metadata(cohort, meta).map_err(ApiError::from_upload)
        }
        None => Ok(cohort),
    }
}

fn multipart_error(e: axum::extract::multipart::MultipartError, limit: usize) -> ApiError {
    if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::too_large(limit)
    } else {
        ApiError::bad_request(e.body_text())
    }
}

/// Accepts `multipart/form-data` with a `cohort` part and an optional
/// `metadata` part, or the cohort CSV as the raw request body.
async fn upload_cohort(State(state): State<AppState>, req: Request) -> Result<Response, ApiError> {
    let limit = state.max_upload_bytes;
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    let (curves, metadata) = if is_multipart {
        let mut mp = Multipart::from_request(req, &state)
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?;
        let (mut curves, mut metadata) = (None::<Bytes>, None::<Bytes>);
        while let Some(field) = mp.next_field().await.map_err(|e| multipart_error(e, limit))? {
            let name = field.name().unwrap_or_default().to_string();
            let data = field.bytes().await.map_err(|e| multipart_error(e, limit))?;
            match name.as_str() {
                "cohort" => curves = Some(data),
                "metadata" => metadata = Some(data),
                other => {
                    return Err(ApiError::bad_request(format!(
                        "unexpected form field `{other}` (expected cohort, metadata)"
                    )))
                }
            }
        }
        let curves = curves.ok_or_else(|| ApiError::bad_request("form field `cohort` is missing"))?;
        (curves, metadata)
    } else {
        let body = to_bytes(req.into_body(), limit)
            .await
            .map_err(|_| ApiError::too_large(limit))?;
        (body, None)
    };
    let cohort = parse_upload(&curves, metadata.as_deref())?;
    let stored = state
        .store
        .insert_cohort(cohort)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    log::info!("stored cohort {} ({} subjects)", stored.id, stored.cohort.len());
    Ok(json_bytes(StatusCode::OK, &CohortSummary::of(&stored)))
}

async fn get_cohort(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let c = state
        .store
        .cohort(&id)
        .ok_or_else(|| ApiError::not_found("cohort", &id))?;
    Ok(json_bytes(StatusCode::OK, &CohortSummary::of(&c)))
}

// ---- fitting ----

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default)]
    pub modes: Option<Vec<String>>,
    #[serde(default)]
    pub pelvis_side: Option<String>,
    /// Comma-separated index families; all by default.
    #[serde(default)]
    pub indices: Option<String>,
}

fn default_omega() -> f64 {
    0.99
}

impl FitRequest {
    fn params(&self) -> Result<FitParams, ApiError> {
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(ApiError::unprocessable(format!(
                "omega must be in (0, 1], got {}",
                self.omega
            )));
        }
        let modes = match &self.modes {
            None => Mode::ALL.to_vec(),
            Some(list) if list.is_empty() => return Err(ApiError::unprocessable("no modes requested")),
            Some(list) => {
                let mut modes = list
                    .iter()
                    .map(|m| {
                        m.parse::<Mode>()
                            .map_err(|e| ApiError::unprocessable(e.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                modes.sort();
                modes.dedup();
                modes
            }
        };
        let pelvis_side = match &self.pelvis_side {
            None => Side::Left,
            Some(s) => s
                .parse()
                .map_err(|e: GaitError| ApiError::unprocessable(e.to_string()))?,
        };
        let indices = match &self.indices {
            None => IndexSelection::all(),
            Some(s) => s
                .parse()
                .map_err(|e: GaitError| ApiError::unprocessable(e.to_string()))?,
        };
        Ok(FitParams {
            omega: self.omega,
            modes,
            pelvis_side,
            indices,
        })
    }
}

/// GDI basis: the published file from the data directory when present,
/// otherwise a surrogate learned from the cohort itself.
fn gdi_basis(cohort: &Cohort, gdi_dir: Option<&std::path::Path>) -> Result<GdiFeatureBasis, GaitError> {
    if let Some(path) = gdi_dir.map(|d| d.join(GDI_BASIS_FILE)).filter(|p| p.exists()) {
        return GdiFeatureBasis::load_csv(path);
    }
    let resampled;
    let c = if cohort.grid().num_points() == GDI_GRID_POINTS {
        cohort
    } else {
        resampled = cohort.resample(GDI_GRID_POINTS)?;
        &resampled
    };
    GdiFeatureBasis::surrogate(c, GDI_FEATURES)
}

/// Fit the pipeline and score the training cohort.
pub fn run_fit(
    cohort: &Cohort,
    params: &FitParams,
    gdi_dir: Option<&std::path::Path>,
) -> Result<FittedModel, ApiError> {
    if cohort.n_healthy() < 2 {
        return Err(ApiError::unprocessable(format!(
            "fitting needs at least 2 healthy subjects, cohort has {}",
            cohort.n_healthy()
        )));
    }
    let config = PipelineConfig {
        omega: params.omega,
        modes: params.modes.clone(),
        pelvis_side: params.pelvis_side,
        ..PipelineConfig::default()
    };
    let pipeline = fit_pipeline(cohort, &config).map_err(ApiError::from_fit)?;
    let mut indices = params.indices;
    let mut extra_notice = None;
    let basis = if indices.gdi {
        match gdi_basis(cohort, gdi_dir) {
            Ok(b) => Some(b),
            Err(e) => {
                indices.gdi = false;
                extra_notice = Some(format!("GDI skipped: {e}"));
                None
            }
        }
    } else {
        None
    };
    let options = ScoreOptions {
        indices,
        gdi_basis: basis,
    };
    let mut report = score_cohort(&pipeline, cohort, &options).map_err(ApiError::from_fit)?;
    report.notices.extend(extra_notice);
    Ok(FittedModel { pipeline, report })
}

async fn fit_cohort(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<BTreeMap<String, String>>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let cohort = state
        .store
        .cohort(&id)
        .ok_or_else(|| ApiError::not_found("cohort", &id))?;
    let req: FitRequest = if body.iter().all(u8::is_ascii_whitespace) {
        serde_json::from_str("{}").unwrap()
    } else {
        serde_json::from_slice(&body)
            .map_err(|e| ApiError::bad_request(format!("invalid fit request: {e}")))?
    };
    let params = req.params()?;
    let run_async = match q.get("async").map(String::as_str) {
        None | Some("false") | Some("0") => false,
        Some("true") | Some("1") => true,
        Some(other) => {
            return Err(ApiError::bad_request(format!(
                "async must be true or false, got `{other}`"
            )))
        }
    };
    if cohort.cohort.n_healthy() < 2 {
        return Err(ApiError::unprocessable(format!(
            "fitting needs at least 2 healthy subjects, cohort has {}",
            cohort.cohort.n_healthy()
        )));
    }

    let model_id = state.store.insert_pending(&cohort.id, params.clone());
    let job = {
        let state = state.clone();
        let model_id = model_id.clone();
        async move {
            let _permit = state.fit_slots.acquire().await.expect("fit pool closed");
            let gdi_dir = state.gdi_dir.clone();
            let outcome =
                tokio::task::spawn_blocking(move || run_fit(&cohort.cohort, &params, gdi_dir.as_deref()))
                    .await
                    .unwrap_or_else(|e| Err(ApiError::internal(format!("fit task failed: {e}"))));
            if let Err(e) = &outcome {
                log::warn!("fit {model_id} failed: {}", e.body.message);
            }
            let status = outcome.as_ref().map(|_| ()).map_err(|e| e.status);
            if let Err(e) = state.store.complete(&model_id, outcome.map_err(|e| e.body)) {
                log::error!("cannot record fit {model_id}: {e}");
            }
            status
        }
    };

    if run_async {
        tokio::spawn(job);
        let entry = state.store.model(&model_id).unwrap();
        return Ok(json_bytes(StatusCode::ACCEPTED, &ModelView::of(&entry)));
    }
    let status = job.await;
    let entry = state.store.model(&model_id).unwrap();
    match (status, &entry.status) {
        (Ok(()), _) => Ok(json_bytes(StatusCode::OK, &ModelView::of(&entry))),
        (Err(code), ModelStatus::Failed(body)) => Err(ApiError {
            status: code,
            body: body.clone(),
        }),
        (Err(code), _) => Err(ApiError::new(code, "internal", "fit failed")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCounts {
    pub mode: Mode,
    /// Number of multivariate components W (multivariate modes only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multivariate_components: Option<usize>,
    /// Total univariate components K+ across the mode's variables.
    pub total_components: usize,
    pub components: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelView {
    pub model_id: String,
    pub cohort_id: String,
    pub status: String,
    pub omega: f64,
    pub pelvis_side: Side,
    pub requested_modes: Vec<Mode>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<ModeCounts>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub summary: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<crate::error::ErrorBody>,
}

impl ModelView {
    fn of(entry: &ModelEntry) -> Self {
        let mut view = ModelView {
            model_id: entry.id.clone(),
            cohort_id: entry.cohort_id.clone(),
            status: entry.status.name().into(),
            omega: entry.params.omega,
            pelvis_side: entry.params.pelvis_side,
            requested_modes: entry.params.modes.clone(),
            modes: Vec::new(),
            summary: Vec::new(),
            notices: Vec::new(),
            error: None,
        };
        match &entry.status {
            ModelStatus::Ready(m) => {
                view.modes = m
                    .pipeline
                    .modes
                    .iter()
                    .map(|mf| ModeCounts {
                        mode: mf.mode,
                        multivariate_components: mf.mfpca.as_ref().map(|m| m.n_components()),
                        total_components: mf.total_components(),
                        components: mf
                            .variables
                            .iter()
                            .zip(&mf.fpca)
                            .map(|(v, f)| (v.to_string(), f.n_components()))
                            .collect(),
                    })
                    .collect();
                view.summary = m.pipeline.summary();
                view.notices = m.report.notices.clone();
            }
            ModelStatus::Failed(e) => view.error = Some(e.clone()),
            ModelStatus::Pending => {}
        }
        view
    }
}

async fn get_model(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = state
        .store
        .model(&id)
        .ok_or_else(|| ApiError::not_found("model", &id))?;
    Ok(json_bytes(StatusCode::OK, &ModelView::of(&entry)))
}

fn ready_model(state: &AppState, id: &str) -> Result<(ModelEntry, Arc<FittedModel>), ApiError> {
    let entry = state
        .store
        .model(id)
        .ok_or_else(|| ApiError::not_found("model", id))?;
    match &entry.status {
        ModelStatus::Ready(m) => {
            let m = m.clone();
            Ok((entry, m))
        }
        ModelStatus::Pending => Err(ApiError::conflict(format!("model `{id}` is still fitting"))),
        ModelStatus::Failed(e) => Err(ApiError::conflict(format!("model `{id}` failed: {}", e.message))),
    }
}

async fn get_full_report(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let (_, m) = ready_model(&state, &id)?;
    Ok(json_bytes(StatusCode::OK, &m.report))
}

// ---- per-subject reads ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectReportView {
    pub model_id: String,
    pub subject_id: String,
    pub healthy: bool,
    pub metadata: ClinicalMetadata,
    pub mode: Option<Mode>,
    pub fgdi: BTreeMap<String, f64>,
    pub sfgdi: BTreeMap<String, f64>,
    pub map: BTreeMap<String, f64>,
    pub gdi: BTreeMap<String, f64>,
    pub sgdi: BTreeMap<String, f64>,
    pub gps: BTreeMap<String, f64>,
    pub oa: BTreeMap<String, f64>,
    pub gvs: BTreeMap<String, f64>,
    pub gdi_basis: Option<BasisSource>,
    pub flags: Vec<String>,
}

fn keep_key(map: &BTreeMap<String, f64>, key: &str) -> BTreeMap<String, f64> {
    map.iter()
        .filter(|(k, _)| k.as_str() == key)
        .map(|(k, v)| (k.clone(), *v))
        .collect()
}

fn subject_view(model_id: &str, m: &FittedModel, r: &SubjectReport, mode: Option<Mode>) -> SubjectReportView {
    let mut view = SubjectReportView {
        model_id: model_id.to_string(),
        subject_id: r.subject_id.clone(),
        healthy: r.healthy,
        metadata: r.metadata.clone(),
        mode,
        fgdi: r.fgdi.clone(),
        sfgdi: r.sfgdi.clone(),
        map: r.map.clone(),
        gdi: r.gdi.clone(),
        sgdi: r.sgdi.clone(),
        gps: r.gps.clone(),
        oa: r.oa.clone(),
        gvs: r.gvs.clone(),
        gdi_basis: m.report.gdi_basis,
        flags: r.flags.clone(),
    };
    if let Some(mode) = mode {
        // per-joint reports sit beside the combined-set reference indices
        let key = if mode == Mode::PerJoint {
            "combined"
        } else {
            mode.name()
        };
        view.fgdi = keep_key(&r.fgdi, mode.name());
        view.sfgdi = keep_key(&r.sfgdi, mode.name());
        view.gps = keep_key(&r.gps, key);
        view.oa = keep_key(&r.oa, key);
        if mode != Mode::PerJoint {
            view.map.clear();
        }
    }
    view
}

fn parse_mode(q: &BTreeMap<String, String>, m: &FittedModel) -> Result<Option<Mode>, ApiError> {
    let Some(raw) = q.get("mode") else { return Ok(None) };
    let mode: Mode = raw
        .parse()
        .map_err(|e: GaitError| ApiError::bad_request(e.to_string()))?;
    if m.pipeline.mode(mode).is_none() {
        return Err(
            ApiError::conflict(format!("mode `{mode}` was not fitted for this model"))
                .with_detail(serde_json::json!({ "fitted_modes": m.pipeline.fitted_modes() })),
        );
    }
    Ok(Some(mode))
}

fn find_subject<'a>(m: &'a FittedModel, sid: &str) -> Result<&'a SubjectReport, ApiError> {
    m.report
        .subject(sid)
        .ok_or_else(|| ApiError::not_found("subject", sid))
}

async fn get_subject_report(
    State(state): State<AppState>,
    Path((id, sid)): Path<(String, String)>,
    Query(q): Query<BTreeMap<String, String>>,
) -> Result<Response, ApiError> {
    let (_, m) = ready_model(&state, &id)?;
    let r = find_subject(&m, &sid)?;
    let mode = parse_mode(&q, &m)?;
    Ok(json_bytes(StatusCode::OK, &subject_view(&id, &m, r, mode)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthyBand {
    /// `min_max`: pointwise envelope of the healthy curves.
    pub kind: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvesView {
    pub model_id: String,
    pub subject_id: String,
    pub variable: String,
    pub label: String,
    pub grid: Vec<f64>,
    pub observed: Vec<f64>,
    pub healthy_mean: Vec<f64>,
    pub healthy_band: HealthyBand,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
}

fn parse_bool(q: &BTreeMap<String, String>, key: &str) -> Result<bool, ApiError> {
    match q.get(key).map(String::as_str) {
        None | Some("false") | Some("0") => Ok(false),
        Some("true") | Some("1") => Ok(true),
        Some(other) => Err(ApiError::bad_request(format!(
            "{key} must be true or false, got `{other}`"
        ))),
    }
}

async fn get_curves(
    State(state): State<AppState>,
    Path((id, sid)): Path<(String, String)>,
    Query(q): Query<BTreeMap<String, String>>,
) -> Result<Response, ApiError> {
    let (entry, m) = ready_model(&state, &id)?;
    let raw = q
        .get("variable")
        .ok_or_else(|| ApiError::bad_request("query parameter `variable` is required"))?;
    let v: VariableId = raw
        .parse()
        .map_err(|e: GaitError| ApiError::bad_request(e.to_string()))?;
    let with_reconstruction = parse_bool(&q, "with_reconstruction")?;
    let cohort = state
        .store
        .cohort(&entry.cohort_id)
        .ok_or_else(|| ApiError::internal(format!("cohort {} missing from store", entry.cohort_id)))?;
    let c = &cohort.cohort;
    let i = c
        .subject_index(&sid)
        .ok_or_else(|| ApiError::not_found("subject", &sid))?;
    let fpca = m
        .pipeline
        .modes
        .iter()
        .find_map(|mf| mf.fpca_for(v))
        .ok_or_else(|| ApiError::conflict(format!("variable `{v}` is not in any fitted mode")))?;

    let observed = c.subjects()[i].curve(v).unwrap().to_vec();
    let healthy_mean = healthy_mean_curves(c, &[v])
        .map_err(ApiError::from_fit)?
        .remove(0);
    let t = observed.len();
    let mut lower = vec![f64::INFINITY; t];
    let mut upper = vec![f64::NEG_INFINITY; t];
    for s in c.subjects().iter().filter(|s| s.healthy) {
        for (l, x) in s.curve(v).unwrap().iter().enumerate() {
            lower[l] = lower[l].min(*x);
            upper[l] = upper[l].max(*x);
        }
    }
    let (reconstruction, components) = if with_reconstruction {
        let k = fpca.n_components();
        (Some(fpca.reconstruct(i, k).map_err(ApiError::from_fit)?), Some(k))
    } else {
        (None, None)
    };
    let view = CurvesView {
        model_id: id,
        subject_id: sid,
        variable: v.to_string(),
        label: v.label(),
        grid: c.grid().positions(),
        observed,
        healthy_mean,
        healthy_band: HealthyBand {
            kind: "min_max".into(),
            lower,
            upper,
        },
        reconstruction,
        components,
    };
    Ok(json_bytes(StatusCode::OK, &view))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSide {
    pub subject_id: String,
    pub healthy: bool,
    pub metadata: ClinicalMetadata,
    pub map: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareView {
    pub model_id: String,
    /// Variable keys in canonical order, aligned with both `map` vectors.
    pub variables: Vec<String>,
    pub labels: Vec<String>,
    pub subject_a: MapSide,
    pub subject_b: MapSide,
}

async fn compare_subjects(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<BTreeMap<String, String>>,
) -> Result<Response, ApiError> {
    let (_, m) = ready_model(&state, &id)?;
    let get = |k: &str| {
        q.get(k)
            .ok_or_else(|| ApiError::bad_request(format!("query parameter `{k}` is required")))
    };
    let (a, b) = (find_subject(&m, get("sid_a")?)?, find_subject(&m, get("sid_b")?)?);
    let pj = m
        .pipeline
        .mode(Mode::PerJoint)
        .ok_or_else(|| ApiError::conflict("comparison needs the per_joint mode, which was not fitted"))?;
    let side = |r: &SubjectReport| -> Result<MapSide, ApiError> {
        let map = pj
            .variables
            .iter()
            .map(|v| r.map.get(&v.to_string()).copied())
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| ApiError::conflict("model was fitted without the fgdi index family"))?;
        Ok(MapSide {
            subject_id: r.subject_id.clone(),
            healthy: r.healthy,
            metadata: r.metadata.clone(),
            map,
        })
    };
    let view = CompareView {
        model_id: id,
        variables: pj.variables.iter().map(|v| v.to_string()).collect(),
        labels: pj.variables.iter().map(|v| v.label()).collect(),
        subject_a: side(a)?,
        subject_b: side(b)?,
    };
    Ok(json_bytes(StatusCode::OK, &view))
}

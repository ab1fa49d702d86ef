//! HTTP endpoints. Each one corresponds to a single step of the
//! interactive analysis: upload, rotate, select lane, mark seed and front,
//! view the chromatogram, pick peaks, finalize the output folder.

use std::time::Instant;

use axum::body::{to_bytes, Body, Bytes};
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use lanescan_core::plot::chart_file_names;
use lanescan_core::report::{grayscale_file_name, report_file_name};
use lanescan_core::{
    analyze_run, compute_profile, crop, decode_image, format_report, make_marks, make_rect,
    output_dir_for, render_chromatogram, rotate, to_grayscale, write_chromatogram, write_grayscale,
    write_report, BaselineMode, PeakResult, PlotStyle, RunReport,
};

use crate::error::ApiError;
use crate::state::{AnalysisSession, AppState, CompletedRun, RunState};

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/healthz", get(healthz))
        .route(
            "/sessions",
            post(create_session).layer(DefaultBodyLimit::max(state.config().max_upload_bytes)),
        )
        .route("/sessions/{id}/rotation", post(set_rotation))
        .route("/sessions/{id}/preview.png", get(preview))
        .route("/sessions/{id}/runs", post(create_run))
        .route("/sessions/{id}/runs/{rid}/marks", post(set_marks))
        .route("/sessions/{id}/runs/{rid}/chromatogram", get(chromatogram))
        .route("/sessions/{id}/runs/{rid}/peaks", post(set_peaks))
        .route("/sessions/{id}/finalize", post(finalize));
    let app = match &state.config().ui_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.fallback(not_found),
    };
    app.layer(middleware::from_fn(log_request)).with_state(state)
}

async fn log_request(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let uri = req.uri().clone();
    let started = Instant::now();
    let response = next.run(req).await;
    log::info!(
        "{} {} {} {:.1}ms",
        method,
        uri,
        response.status().as_u16(),
        started.elapsed().as_secs_f64() * 1e3
    );
    response
}

async fn healthz() -> &'static str {
    "ok"
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

/// JSON body with errors reported in the service envelope, naming the field.
struct ApiJson<T>(T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "unreadable_body", e.body_text()))?;
        let de = &mut serde_json::Deserializer::from_slice(&bytes);
        match serde_path_to_error::deserialize(de) {
            Ok(v) => Ok(ApiJson(v)),
            Err(e) => {
                let path = e.path().to_string();
                let inner = e.into_inner();
                let err = if inner.is_syntax() || inner.is_eof() {
                    ApiError::new(StatusCode::BAD_REQUEST, "malformed_json", inner.to_string())
                } else {
                    ApiError::unprocessable("invalid_body", inner.to_string())
                };
                Err(if path == "." { err } else { err.with_field(path) })
            }
        }
    }
}

async fn lock_session(
    state: &AppState,
    id: &str,
) -> Result<tokio::sync::OwnedMutexGuard<AnalysisSession>, ApiError> {
    let session = state.get(id).ok_or_else(|| ApiError::session_not_found(id))?;
    Ok(session.lock_owned().await)
}

fn run_mut<'a>(session: &'a mut AnalysisSession, rid: &str) -> Result<&'a mut RunState, ApiError> {
    rid.parse::<u64>()
        .ok()
        .and_then(|n| session.runs.get_mut(&n))
        .ok_or_else(|| ApiError::run_not_found(rid))
}

fn stale_run() -> ApiError {
    ApiError::conflict(
        "rect_required",
        "this run has no lane selection (the rotation changed); select the lane again",
    )
}

fn marks_required() -> ApiError {
    ApiError::conflict("marks_required", "mark the seed point and solvent front first")
}

#[derive(Deserialize)]
struct UploadQuery {
    name: Option<String>,
}

#[derive(Serialize)]
struct SessionCreated {
    session_id: String,
    width: usize,
    height: usize,
}

fn sanitize_name(raw: Option<&str>) -> String {
    raw.and_then(|n| std::path::Path::new(n).file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .filter(|n| !n.is_empty() && n != "." && n != "..")
        .unwrap_or_else(|| "upload".to_string())
}

async fn create_session(
    State(state): State<AppState>,
    Query(query): Query<UploadQuery>,
    req: Request,
) -> Result<Response, ApiError> {
    let limit = state.config().max_upload_bytes;
    let (parts, body) = req.into_parts();
    let bytes = to_bytes(body, limit).await.map_err(|_| {
        ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "payload_too_large",
            format!("upload exceeds the {limit} byte limit"),
        )
    })?;

    let content_type = parts
        .headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or_default()
        .to_string();
    let (image_bytes, file_name) = if content_type.starts_with("multipart/form-data") {
        // Rebuilt from the original parts so the route's body limit still applies.
        let req = Request::from_parts(parts, Body::from(bytes));
        let mut form = Multipart::from_request(req, &())
            .await
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_multipart", e.body_text()))?;
        let mut found = None;
        while let Some(field) = form
            .next_field()
            .await
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_multipart", e.body_text()))?
        {
            let is_image = field.name() == Some("image") || field.file_name().is_some();
            if !is_image {
                continue;
            }
            let name = field.file_name().map(str::to_string);
            let data = field
                .bytes()
                .await
                .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_multipart", e.body_text()))?;
            found = Some((data, name));
            break;
        }
        found.ok_or_else(|| {
            ApiError::unprocessable("missing_image", "multipart body has no image field")
                .with_field("image")
        })?
    } else {
        (bytes, query.name.clone())
    };

    let original = decode_image(&image_bytes)?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let (width, height) = (original.width(), original.height());
    let name = sanitize_name(file_name.as_deref().or(query.name.as_deref()));
    state.insert(AnalysisSession::new(id.clone(), name, original));
    Ok((
        StatusCode::CREATED,
        Json(SessionCreated {
            session_id: id,
            width,
            height,
        }),
    )
        .into_response())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Angle {
    Number(f64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RotationBody {
    degrees: Angle,
}

async fn set_rotation(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(body): ApiJson<RotationBody>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let degrees = match body.degrees {
        Angle::Number(v) => v,
        Angle::Text(t) => t.trim().parse::<f64>().map_err(|_| {
            ApiError::unprocessable("invalid_body", format!("{t:?} is not a number")).with_field("degrees")
        })?,
    };
    let mut session = lock_session(&state, &id).await?;
    let gray = rotate(&to_grayscale(&session.original), degrees)?;
    session.gray = gray;
    session.rotation_degrees = degrees;
    for run in session.runs.values_mut() {
        run.invalidate();
    }
    Ok(Json(json!({ "width": session.gray.width(), "height": session.gray.height() })))
}

async fn preview(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let session = lock_session(&state, &id).await?;
    let png = session.gray.to_png().map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunBody {
    rect_clicks: [[f64; 2]; 2],
}

async fn create_run(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(body): ApiJson<RunBody>,
) -> Result<Response, ApiError> {
    let mut session = lock_session(&state, &id).await?;
    let [a, b] = body.rect_clicks;
    let rect = make_rect(
        (a[0], a[1]),
        (b[0], b[1]),
        session.gray.width(),
        session.gray.height(),
    )
    .map_err(|e| ApiError::from(e).with_field("rect_clicks"))?;
    let lane = crop(&session.gray, rect)?;
    let run_id = session.next_run_id;
    session.next_run_id += 1;
    let body = json!({
        "run_id": run_id,
        "crop_width": rect.width(),
        "crop_height": rect.height(),
        "rect": rect,
    });
    session.runs.insert(
        run_id,
        RunState {
            rect: Some(rect),
            crop: Some(lane),
            ..RunState::default()
        },
    );
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarksBody {
    seed_click_y: f64,
    front_click_y: f64,
}

async fn set_marks(
    State(state): State<AppState>,
    Path((id, rid)): Path<(String, String)>,
    ApiJson(body): ApiJson<MarksBody>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let mut session = lock_session(&state, &id).await?;
    let run = run_mut(&mut session, &rid)?;
    let lane = run.crop.as_mut().ok_or_else(stale_run)?;
    let marks = make_marks(body.seed_click_y, body.front_click_y, lane.height())?;
    lane.set_marks(marks)?;
    let chrom = compute_profile(lane).map_err(|e| ApiError::internal(e.to_string()))?;
    run.marks = Some(marks);
    run.chromatogram = Some(chrom);
    run.completed = None;
    Ok(Json(json!({ "seed_row": marks.seed_row, "front_row": marks.front_row })))
}

async fn chromatogram(
    State(state): State<AppState>,
    Path((id, rid)): Path<(String, String)>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let mut session = lock_session(&state, &id).await?;
    let run = run_mut(&mut session, &rid)?;
    if run.rect.is_none() {
        return Err(stale_run());
    }
    let chrom = run.chromatogram.as_ref().ok_or_else(marks_required)?;
    Ok(Json(json!({
        "signal": chrom.signal(),
        "seed_idx": chrom.seed_idx(),
        "front_idx": chrom.front_idx(),
    })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PeaksBody {
    peak_clicks: Vec<[[f64; 2]; 2]>,
    #[serde(default)]
    baseline: BaselineMode,
    #[serde(default)]
    comments: String,
}

#[derive(Serialize)]
struct PeaksResponse {
    peaks: Vec<PeakResult>,
    report_text: String,
}

async fn set_peaks(
    State(state): State<AppState>,
    Path((id, rid)): Path<(String, String)>,
    ApiJson(body): ApiJson<PeaksBody>,
) -> Result<Json<PeaksResponse>, ApiError> {
    let mut session = lock_session(&state, &id).await?;
    let image_name = session.image_name.clone();
    let run_number = rid.parse::<usize>().unwrap_or_default();
    let run = run_mut(&mut session, &rid)?;
    let rect = run.rect.ok_or_else(stale_run)?;
    let (Some(marks), Some(chrom)) = (run.marks, run.chromatogram.as_ref()) else {
        return Err(marks_required());
    };
    let clicks: Vec<_> = body
        .peak_clicks
        .iter()
        .map(|[a, b]| [(a[0], a[1]), (b[0], b[1])])
        .collect();
    let peaks = analyze_run(chrom, &clicks, body.baseline)
        .map_err(|e| ApiError::from(e).with_field("peak_clicks"))?;
    let report = RunReport {
        image_name,
        run_number,
        comments: body.comments,
        baseline_mode: body.baseline,
        marks,
        rect,
        peaks: peaks.clone(),
    };
    let report_text = format_report(&report);
    run.completed = Some(CompletedRun {
        peaks: peaks.clone(),
        report,
        report_text: report_text.clone(),
    });
    Ok(Json(PeaksResponse { peaks, report_text }))
}

#[derive(Serialize)]
struct FinalizeResponse {
    output_dir: String,
    grayscale: String,
    files: Vec<String>,
}

async fn finalize(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<FinalizeResponse>, ApiError> {
    let session = lock_session(&state, &id).await?;
    let completed: Vec<(&RunState, &CompletedRun)> = session
        .runs
        .values()
        .filter_map(|r| r.completed.as_ref().map(|c| (r, c)))
        .collect();
    if completed.is_empty() {
        return Err(ApiError::conflict(
            "no_completed_runs",
            "no run has picked peaks yet; nothing to write",
        ));
    }

    let io = |e: lanescan_core::ReportError| ApiError::internal(e.to_string());
    let anchor = state
        .config()
        .state_dir
        .join(&session.id)
        .join(&session.image_name);
    let dir = output_dir_for(&anchor).map_err(io)?;
    write_grayscale(&dir, &session.gray).map_err(io)?;

    let style = PlotStyle::default();
    let mut files = Vec::new();
    for (run, done) in completed {
        let chrom = run
            .chromatogram
            .as_ref()
            .ok_or_else(|| ApiError::internal("completed run lost its chromatogram"))?;
        let n = done.report.run_number;
        let chart = render_chromatogram(chrom, &done.peaks, &style).map_err(io)?;
        write_chromatogram(&dir, n, &chart).map_err(io)?;
        write_report(&dir, &done.report).map_err(io)?;
        let (png, svg) = chart_file_names(n);
        files.extend([png, svg, report_file_name(n)]);
    }
    Ok(Json(FinalizeResponse {
        output_dir: dir.display().to_string(),
        grayscale: grayscale_file_name().to_string(),
        files,
    }))
}

#[cfg(test)]
mod tests {
    use super::sanitize_name;

    #[test]
    fn upload_names_are_reduced_to_file_names() {
        assert_eq!(sanitize_name(Some("../../etc/plate7.png")), "plate7.png");
        assert_eq!(sanitize_name(Some("")), "upload");
        assert_eq!(sanitize_name(Some("..")), "upload");
        assert_eq!(sanitize_name(None), "upload");
    }
}

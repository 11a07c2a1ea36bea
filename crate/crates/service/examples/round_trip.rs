//! Upload a synthetic cohort, fit it and read reports through the router,
//! without opening a socket.
//!
//! `cargo run -p gaitdex-service --example round_trip`

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use gaitdex::synth::{synth_cohort, SynthConfig};
use gaitdex_service::{app, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

async fn call(app: &Router, req: Request<Body>) -> (u16, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status().as_u16();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let app = app(&ServiceConfig::default())?;

    let cohort = synth_cohort(&SynthConfig::default())?;
    let mut csv = Vec::new();
    gaitdex::csv_io::write_cohort(&cohort, &mut csv)?;
    let (status, body) = call(&app, Request::post("/cohorts").body(Body::from(csv))?).await;
    println!("POST /cohorts -> {status} {body}");
    let cohort_id = body["cohort_id"].as_str().unwrap().to_string();

    let fit = r#"{"omega": 0.99, "modes": ["combined", "per_joint"]}"#;
    let (status, body) = call(
        &app,
        Request::post(format!("/cohorts/{cohort_id}/fit")).body(Body::from(fit))?,
    )
    .await;
    println!("POST /cohorts/{cohort_id}/fit -> {status}");
    let model_id = body["model_id"].as_str().unwrap().to_string();
    for m in body["modes"].as_array().unwrap() {
        println!("  {} total components {}", m["mode"], m["total_components"]);
    }

    let (_, report) = call(
        &app,
        Request::get(format!("/models/{model_id}/subjects/P001/report")).body(Body::empty())?,
    )
    .await;
    println!("P001 sFGDI {}", report["sfgdi"]);

    let uri = format!("/models/{model_id}/compare?sid_a=H001&sid_b=P001");
    let (_, cmp) = call(&app, Request::get(uri).body(Body::empty())?).await;
    for (k, v) in cmp["variables"].as_array().unwrap().iter().enumerate().take(5) {
        println!(
            "  {:<22} H001 {:>6.2}  P001 {:>6.2}",
            v.as_str().unwrap(),
            cmp["subject_a"]["map"][k].as_f64().unwrap(),
            cmp["subject_b"]["map"][k].as_f64().unwrap()
        );
    }
    Ok(())
}

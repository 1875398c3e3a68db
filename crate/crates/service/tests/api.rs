use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use http_body_util::BodyExt;
use pigment_core::synthetic::synthetic_scene;
use pigment_core::{DecompositionBundle, PigmentDictionary, RenderContext, WavelengthGrid};
use pigment_service::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

const FIXTURE: [&str; 4] = ["cadmium_red", "ultramarine_blue", "cadmium_yellow", "titanium_white"];

fn fixture_bundle(w: usize, h: usize) -> DecompositionBundle {
    let dict = PigmentDictionary::bundled();
    let scene = synthetic_scene(&dict, &FIXTURE, WavelengthGrid::Bands8, w, h, 3).unwrap();
    DecompositionBundle::new(
        w,
        h,
        scene.palette,
        scene.weights,
        RenderContext::standard(WavelengthGrid::Bands8),
    )
    .unwrap()
}

fn loaded_app() -> Router {
    let state = AppState::with_bundle(PigmentDictionary::bundled(), fixture_bundle(24, 16)).unwrap();
    router(Arc::new(state))
}

async fn call(app: &Router, method: Method, uri: &str, body: Body) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).body(body).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    call(app, Method::GET, uri, Body::empty()).await
}

async fn post_json(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let (status, bytes) = call(app, Method::POST, uri, Body::from(body.to_string())).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn edit(app: &Router, op: Value) -> Value {
    let (status, body) = post_json(app, "/edit", op).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    body
}

fn image_of(resp: &Value) -> Vec<u8> {
    BASE64.decode(resp["image"].as_str().unwrap()).unwrap()
}

#[tokio::test]
async fn reads_are_404_before_any_decomposition() {
    let app = router(Arc::new(AppState::new(PigmentDictionary::bundled())));
    for uri in ["/palette", "/render", "/weights/0", "/job/1"] {
        assert_eq!(get(&app, uri).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
    let (status, body) = post_json(&app, "/edit", json!({"op": "edge_enhance", "strength": 1.0})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("no decomposition"));
    assert_eq!(post_json(&app, "/undo", json!({})).await.0, StatusCode::NOT_FOUND);
    // The dictionary does not need a bundle.
    let (status, body) = get(&app, "/dictionary").await;
    assert_eq!(status, StatusCode::OK);
    let body: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(body["pigments"].as_array().unwrap().len(), PigmentDictionary::bundled().len());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn decompose_job_reports_the_bundle_and_rejects_a_second_submit() {
    let app = router(Arc::new(AppState::new(PigmentDictionary::bundled())));
    let scene = synthetic_scene(&PigmentDictionary::bundled(), &FIXTURE, WavelengthGrid::Bands8, 64, 64, 1).unwrap();
    let png = pigment_io::encode_png(&scene.image).unwrap();

    let (status, body) = call(&app, Method::POST, "/decompose?m=4&wavelengths=8", Body::from(png.clone())).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let id = serde_json::from_slice::<Value>(&body).unwrap()["job_id"].as_u64().unwrap();
    let (status, _) = call(&app, Method::POST, "/decompose?m=4", Body::from(png)).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let job = loop {
        let (status, body) = get(&app, &format!("/job/{id}")).await;
        assert_eq!(status, StatusCode::OK);
        let job: Value = serde_json::from_slice(&body).unwrap();
        match job["state"].as_str().unwrap() {
            "running" => tokio::time::sleep(Duration::from_millis(100)).await,
            "done" => break job,
            other => panic!("job ended {other}: {job}"),
        }
    };
    let result = &job["result"];
    assert_eq!(result["width"], 64);
    assert_eq!(result["height"], 64);
    assert_eq!(result["pigments"], 4);
    assert_eq!(result["wavelengths"], 8);
    let rmse = result["rmse"].as_f64().unwrap();
    assert!(rmse <= 0.04, "rmse {rmse}");
    let levels = result["levels"].as_array().unwrap();
    assert!(!levels.is_empty());
    assert_eq!(levels.last().unwrap()["width"], 64);
    assert!(!result["anls_energy"].as_array().unwrap().is_empty());

    // The session now holds the finished bundle.
    let (_, body) = get(&app, "/palette").await;
    let palette: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(palette["pigments"].as_array().unwrap().len(), 4);
    assert_eq!(palette["revision"], result["revision"]);
    let (_, render) = get(&app, "/render").await;
    let rendered = pigment_io::decode_png(&render).unwrap();
    let measured = rendered.rmse(&scene.image).unwrap();
    assert!((measured - rmse).abs() < 2.0 / 255.0, "{measured} vs {rmse}");

    // Undecodable bodies are rejected before a job is created.
    let bad = call(&app, Method::POST, "/decompose?m=4", Body::from("not a png")).await;
    assert_eq!(bad.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn decompose_rejects_bad_parameters() {
    let app = router(Arc::new(AppState::new(PigmentDictionary::bundled())));
    let png = pigment_io::encode_png(&fixture_bundle(4, 4).render()).unwrap();
    for uri in [
        "/decompose",
        "/decompose?m=0",
        "/decompose?m=four",
        "/decompose?m=4&wavelengths=5",
        "/decompose?m=4&init=spiral",
        "/decompose?m=4&colour=red",
    ] {
        let (status, _) = call(&app, Method::POST, uri, Body::from(png.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
    }
    assert_eq!(get(&app, "/job/1").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn identity_scale_returns_identical_png() {
    let app = loaded_app();
    let (status, before) = get(&app, "/render").await;
    assert_eq!(status, StatusCode::OK);
    let resp = edit(&app, json!({"op": "scale_weight", "pigment": 1, "factor": 1.0})).await;
    assert_eq!(image_of(&resp), before);
    assert_eq!(resp["thumbnails"].as_array().unwrap().len(), 4);
    assert_eq!(resp["width"], 24);
}

#[tokio::test]
async fn render_matches_last_edit_and_revisions_increase() {
    let app = loaded_app();
    let (_, original) = get(&app, "/render").await;
    let first = edit(&app, json!({"op": "scale_weight", "pigment": 0, "factor": 2.5})).await;
    let second = edit(&app, json!({"op": "scale_scattering", "pigment": 3, "factor": 0.5})).await;
    assert!(second["revision"].as_u64() > first["revision"].as_u64());
    assert_ne!(image_of(&second), original);
    assert_eq!(get(&app, "/render").await.1, image_of(&second));
}

#[tokio::test]
async fn undo_restores_and_redo_replays() {
    let app = loaded_app();
    let (_, original) = get(&app, "/render").await;
    assert_eq!(post_json(&app, "/undo", json!({})).await.0, StatusCode::CONFLICT);

    let cut = json!({"op": "cut", "mask": {"kind": "rect", "x0": 4, "y0": 4, "x1": 12, "y1": 10}});
    edit(&app, cut).await;
    let (status, undone) = post_json(&app, "/undo", json!({})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(image_of(&undone), original);
    assert_eq!(get(&app, "/render").await.1, original);

    let swapped = edit(&app, json!({"op": "swap_pigment", "pigment": 0, "name": "phthalo_green"})).await;
    assert_ne!(image_of(&swapped), original);
    let (_, undone) = post_json(&app, "/undo", json!({})).await;
    assert_eq!(image_of(&undone), original);
    let (status, redone) = post_json(&app, "/redo", json!({})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(image_of(&redone), image_of(&swapped));
    assert_eq!(post_json(&app, "/redo", json!({})).await.0, StatusCode::CONFLICT);

    // Replaying the same swap from the original gives the same bytes.
    post_json(&app, "/undo", json!({})).await;
    let again = edit(&app, json!({"op": "swap_pigment", "pigment": 0, "name": "phthalo_green"})).await;
    assert_eq!(image_of(&again), image_of(&swapped));
}

#[tokio::test]
async fn palette_and_weight_views() {
    let app = loaded_app();
    let (status, body) = get(&app, "/palette").await;
    assert_eq!(status, StatusCode::OK);
    let palette: Value = serde_json::from_slice(&body).unwrap();
    let pigments = palette["pigments"].as_array().unwrap();
    assert_eq!(pigments.len(), 4);
    assert_eq!(palette["wavelengths_nm"].as_array().unwrap().len(), 8);
    for p in pigments {
        assert_eq!(p["a"].as_array().unwrap().len(), 8);
        assert_eq!(p["s"].as_array().unwrap().len(), 8);
        assert_eq!(p["hex"].as_str().unwrap().len(), 7);
    }

    let (status, png) = get(&app, "/weights/2").await;
    assert_eq!(status, StatusCode::OK);
    let img = pigment_io::decode_png(&png).unwrap();
    assert_eq!((img.width(), img.height()), (24, 16));
    let (_, thumb) = get(&app, "/weights/2?max_edge=8").await;
    let thumb = pigment_io::decode_png(&thumb).unwrap();
    assert_eq!((thumb.width(), thumb.height()), (6, 4));

    assert_eq!(get(&app, "/weights/4").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/weights/x").await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn edit_status_codes() {
    let app = loaded_app();
    let (_, before) = get(&app, "/render").await;
    let cases = [
        (json!({"op": "melt"}), StatusCode::BAD_REQUEST),
        (json!({"pigment": 0}), StatusCode::BAD_REQUEST),
        (json!({"op": "scale_weight", "pigment": 0}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"op": "scale_weight", "pigment": 9, "factor": 2.0}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"op": "scale_weight", "pigment": 0, "factor": -1.0}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"op": "swap_pigment", "pigment": 0, "name": "unobtainium"}), StatusCode::UNPROCESSABLE_ENTITY),
        (
            json!({"op": "cut", "mask": {"kind": "rect", "x0": 0, "y0": 0, "x1": 99, "y1": 2}}),
            StatusCode::UNPROCESSABLE_ENTITY,
        ),
        (
            json!({"op": "copy_paste", "mask": {"kind": "threshold", "pigment": 0, "threshold": 0.5},
                   "pigments": [0], "offset": [1, 1], "mode": "glaze"}),
            StatusCode::UNPROCESSABLE_ENTITY,
        ),
    ];
    for (op, expected) in cases {
        let (status, body) = post_json(&app, "/edit", op.clone()).await;
        assert_eq!(status, expected, "{op} -> {body}");
        assert!(body["error"].is_string());
    }
    let (status, _) = call(&app, Method::POST, "/edit", Body::from("{not json")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    // Rejected edits leave the session alone.
    assert_eq!(get(&app, "/render").await.1, before);
    assert_eq!(post_json(&app, "/undo", json!({})).await.0, StatusCode::CONFLICT);
}

#[tokio::test]
async fn session_survives_a_restart_through_a_saved_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session");
    let app = loaded_app();
    let pasted = edit(
        &app,
        json!({"op": "copy_paste", "mask": {"kind": "rect", "x0": 0, "y0": 0, "x1": 6, "y1": 6},
               "pigments": [0, 1], "offset": [10, 4], "mode": "layer", "thickness": 0.7}),
    )
    .await;
    let (status, _) = post_json(&app, "/session/save", json!({"path": path})).await;
    assert_eq!(status, StatusCode::OK);

    let fresh = router(Arc::new(AppState::new(PigmentDictionary::bundled())));
    let (status, loaded) = post_json(&fresh, "/session/load", json!({"path": path})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(image_of(&loaded), image_of(&pasted));
    assert_eq!(get(&fresh, "/render").await.1, image_of(&pasted));

    let (status, _) = post_json(&fresh, "/session/load", json!({"path": dir.path().join("missing")})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = post_json(&fresh, "/session/load", json!({"file": "x"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn edit_round_trip_fits_the_interactive_budget() {
    // 600×500 re-render plus PNG and thumbnails; loose bound for shared
    // test machines.
    let state = AppState::with_bundle(PigmentDictionary::bundled(), fixture_bundle(600, 500)).unwrap();
    let app = router(Arc::new(state));
    let start = std::time::Instant::now();
    edit(&app, json!({"op": "scale_weight", "pigment": 2, "factor": 1.5})).await;
    let elapsed = start.elapsed();
    eprintln!("600x500 edit round trip: {elapsed:?}");
    assert!(elapsed < Duration::from_secs(2), "{elapsed:?}");
}

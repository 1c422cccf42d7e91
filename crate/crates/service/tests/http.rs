use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use suprec_service::router;

async fn call(method: Method, uri: &str, body: Option<&str>) -> (StatusCode, Vec<u8>) {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => builder
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => builder.body(Body::empty()).unwrap(),
    };
    let resp = router(None).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn post_json(uri: &str, body: Value) -> (StatusCode, Value) {
    let (s, b) = call(Method::POST, uri, Some(&body.to_string())).await;
    (s, serde_json::from_slice(&b).unwrap())
}

async fn get_json(uri: &str) -> (StatusCode, Value) {
    let (s, b) = call(Method::GET, uri, None).await;
    (s, serde_json::from_slice(&b).unwrap())
}

fn worked() -> Value {
    json!({"p": 1_000_000, "f": 0.01, "R": 1.2, "phi1": "optimal", "n_subjects": 165_035, "per_subject_alleles": 2})
}

fn field_names(v: &Value) -> Vec<String> {
    v["fields"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["field"].as_str().unwrap().to_string())
        .collect()
}

#[tokio::test]
async fn power_worked_example() {
    let (s, v) = post_json("/v1/power", worked()).await;
    assert_eq!(s, StatusCode::OK);
    let power = v["power"].as_f64().unwrap();
    assert!((power - 0.5).abs() < 0.01, "{power}");
    assert!((v["phi1_used"].as_f64().unwrap() - 0.478).abs() < 1e-3);
    // resolved query echoed, defaults filled in
    assert_eq!(v["query"]["phi1"], "optimal");
    assert_eq!(v["query"]["alpha"].as_f64(), Some(0.05));
    assert_eq!(v["query"]["R"].as_f64(), Some(1.2));
}

#[tokio::test]
async fn power_null_odds() {
    let mut body = worked();
    body["R"] = json!(1.0);
    let (s, v) = post_json("/v1/power", body).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["r"].as_f64(), Some(0.0));
    assert!((v["power"].as_f64().unwrap() - 0.05 / 1e6).abs() < 1e-15);
}

#[tokio::test]
async fn power_field_errors() {
    let mut body = worked();
    body["f"] = json!(-0.1);
    let (s, v) = post_json("/v1/power", body).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(field_names(&v), ["f"]);

    let (s, v) = post_json("/v1/power", json!({"p": 10, "f": "x", "extra": 1})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let names = field_names(&v);
    for want in ["f", "R", "n_subjects", "extra"] {
        assert!(names.contains(&want.to_string()), "{names:?}");
    }

    let (s, b) = call(Method::POST, "/v1/power", Some("{not json")).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!(field_names(&v), ["body"]);
}

#[tokio::test]
async fn identical_requests_identical_bodies() {
    let body = worked().to_string();
    let (_, a) = call(Method::POST, "/v1/power", Some(&body)).await;
    let (_, b) = call(Method::POST, "/v1/power", Some(&body)).await;
    assert_eq!(a, b);
    assert!(a.ends_with(b"\n"));
}

#[tokio::test]
async fn sample_size_endpoint() {
    let q = json!({"p": 1_000_000, "fwer": 0.05, "fnr": 0.5, "f": 0.01, "R": 1.2, "phi1": "optimal"});
    let (s, v) = post_json("/v1/sample-size", q.clone()).await;
    assert_eq!(s, StatusCode::OK);
    let n = v["n_subjects"].as_f64().unwrap();
    let n_asym = v["n_asymptotic"].as_f64().unwrap();
    assert!((n / 165_035.0 - 1.0).abs() < 5e-3, "{n}");
    assert!((n_asym / 153_509.0 - 1.0).abs() < 5e-3, "{n_asym}");

    let mut by_power = q.clone();
    by_power.as_object_mut().unwrap().remove("fnr");
    by_power["target_power"] = json!(0.5);
    let (_, w) = post_json("/v1/sample-size", by_power).await;
    assert_eq!(w["n_subjects"], v["n_subjects"]);

    let mut null = q.clone();
    null["R"] = json!(1.0);
    let (s, v) = post_json("/v1/sample-size", null).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "infeasible");

    let mut both = q;
    both["target_power"] = json!(0.8);
    let (s, _) = post_json("/v1/sample-size", both).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn sample_size_asymptotic_scales_with_signal() {
    // a stronger effect on the same marginals: n_asymptotic * w2 is constant
    let base = json!({"p": 1000, "fnr": 0.2, "f": 0.2, "R": 1.5, "phi1": 0.5});
    let (_, a) = post_json("/v1/sample-size", base.clone()).await;
    let mut other = base;
    other["R"] = json!(2.5);
    let (_, b) = post_json("/v1/sample-size", other).await;
    let ka = a["n_asymptotic"].as_f64().unwrap() * a["w2"].as_f64().unwrap();
    let kb = b["n_asymptotic"].as_f64().unwrap() * b["w2"].as_f64().unwrap();
    assert!((ka / kb - 1.0).abs() < 1e-12);
}

#[tokio::test]
async fn design_endpoint() {
    let (s, v) = post_json("/v1/design", json!({"f": 0.01, "R": 1.2})).await;
    assert_eq!(s, StatusCode::OK);
    assert!((v["phi1_star"].as_f64().unwrap() - 0.478).abs() < 1e-3);
    let (_, v) = post_json("/v1/design", json!({"f": 0.37, "R": 1})).await;
    assert_eq!(v["phi1_star"].as_f64(), Some(0.5));
    let (s, v) = post_json("/v1/design", json!({"f": 1.5, "R": 2})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(field_names(&v), ["f"]);
}

#[tokio::test]
async fn orraf_endpoint() {
    let (s, v) = get_json("/v1/orraf?p=100&n=100000&phi1=0.5&f_steps=40&r_steps=30&r_max=1.3").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["f_grid"].as_array().unwrap().len(), 40);
    assert_eq!(v["r_grid"].as_array().unwrap().len(), 30);
    let power = v["power"].as_array().unwrap();
    assert_eq!(power.len(), 30);
    let level = 0.05 / 100.0;
    for cell in power[0].as_array().unwrap() {
        assert!((cell.as_f64().unwrap() - level).abs() < 1e-10 * level);
    }
    assert!(!v["boundary_contour"].as_array().unwrap().is_empty());
    assert!(!v["equi_signal"].as_object().unwrap().is_empty());

    let (s, _) = get_json("/v1/orraf?f_steps=600").await;
    assert_eq!(s, StatusCode::PAYLOAD_TOO_LARGE);
    let (s, v) = get_json("/v1/orraf?alpha=2").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(field_names(&v), ["alpha"]);
    let (s, v) = get_json("/v1/orraf?bogus=1").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(field_names(&v), ["bogus"]);
}

#[tokio::test]
async fn boundaries_endpoint() {
    let (s, v) = get_json("/v1/boundaries?beta_steps=50").await;
    assert_eq!(s, StatusCode::OK);
    let col = |k: &str| -> Vec<f64> { v[k].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect() };
    let (f, h, gt, ht, g) = (col("detection"), col("approx"), col("exact_approx"), col("approx_exact"), col("exact"));
    for i in 0..50 {
        assert!(f[i] < h[i] && h[i] < gt[i] && gt[i] < ht[i] && ht[i] < g[i]);
        assert_eq!(gt[i], 1.0);
    }
    let (s, _) = get_json("/v1/boundaries?beta_grid=0.2,0.5").await;
    assert_eq!(s, StatusCode::OK);
    let (s, v) = get_json("/v1/boundaries?beta_grid=").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(field_names(&v), ["beta_grid"]);
}

#[tokio::test]
async fn catalog_endpoint() {
    let tsv = "id\traf\tor\tn_cases\tn_controls\nrs1\t0.2\t1.1\t100\t120\nrs2\t2\t1.1\t100\t120\n";
    let req = Request::post("/v1/catalog").body(Body::from(tsv)).unwrap();
    let resp = router(None).oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let v: Value = serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 1);
    assert_eq!(v["rejects"][0]["line"], 3);
    assert_eq!(v["survival_bias_caveat"], true);

    let req = Request::post("/v1/catalog?p=1000000").body(Body::from(tsv)).unwrap();
    let resp = router(None).oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let v: Value = serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap();
    let rec = &v["records"][0];
    assert_eq!(rec["n_observations"], 440);
    assert!((rec["phi1"].as_f64().unwrap() - 100.0 / 220.0).abs() < 1e-15);
    assert!(rec["power"].as_f64().unwrap() < 1e-3);
    assert!(v["caveat"].as_str().unwrap().contains("survival bias"));

    let req = Request::post("/v1/catalog").body(Body::from("wrong\theader\n")).unwrap();
    let resp = router(None).oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn spec_and_cors() {
    let (s, v) = get_json("/v1/spec").await;
    assert_eq!(s, StatusCode::OK);
    assert!(v["paths"]["/v1/power"]["post"].is_object());
    let req = Request::builder()
        .method(Method::OPTIONS)
        .uri("/v1/power")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let resp = router(None).oneshot(req).await.unwrap();
    assert!(resp.headers().contains_key(header::ACCESS_CONTROL_ALLOW_ORIGIN));
}

#[tokio::test]
async fn static_app_served() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html>ui</html>").unwrap();
    let app = router(Some(dir.path().to_path_buf()));
    let resp = app
        .oneshot(Request::get("/app/index.html").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let body = resp.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&body[..], b"<html>ui</html>");
}
